use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_betadyn")).args(args).output().expect("spawn betadyn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ctx_reports_golden_ratio() {
    let o = run(&["ctx"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("1.61803398874989"), "{s}");
    assert!(s.contains("Pisot: yes"));
}

#[test]
fn expand_half() {
    let o = run(&["expand", "--x", "1/2", "--digits", "9", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().last(), Some("0,1,0,0,1,0,0,1,0"));
}

#[test]
fn expand_accepts_inverse_beta() {
    let o = run(&["expand", "--x", "beta^-2", "--digits", "4", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().last(), Some("0,1,0,0"));
}

#[test]
fn density_csv_has_two_cells() {
    let o = run(&["density", "--format", "csv"]);
    let s = stdout(&o);
    let rows: Vec<&str> = s.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0") && rows[0].contains(",1.1708203932499"));
    assert!(rows[1].starts_with("0.6180339887") && rows[1].contains(",0.7236067977499"));
}

#[test]
fn invalid_digits_exit_2() {
    let o = run(&["validate", "--digits", "1,1,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["validate", "--digits", "1,0,1,0"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bad_parameters_exit_64() {
    assert_eq!(run(&["eigen", "--z", "1,0"]).status.code(), Some(64));
    assert_eq!(run(&["partition", "--M", "2"]).status.code(), Some(64));
    assert_eq!(run(&["ctx", "--n", "1"]).status.code(), Some(64));
    assert_eq!(run(&["nosuchcommand"]).status.code(), Some(64));
}

#[test]
fn oversized_partition_exit_3() {
    let o = run(&["partition", "--n", "2", "--q", "3", "--M", "40"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn json_output_carries_metadata() {
    let o = run(&["spectrum", "--n", "3", "--q", "2", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["meta"]["command"], "spectrum");
    assert_eq!(v["meta"]["n"], 3);
    assert_eq!(v["meta"]["q"], 2);
    assert_eq!(v["result"]["spectral"]["window_holds"], true);
}

#[test]
fn stochastic_output_is_reproducible() {
    let args = ["ergodic", "--N", "100,500", "--starts", "200", "--format", "csv"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "1"]);
    assert_eq!(run(&threaded).stdout, a.stdout);
}

#[test]
fn out_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("betadyn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("corr.csv");
    let o = run(&["correlate", "--max-lag", "4", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, run(&["correlate", "--max-lag", "4", "--format", "csv"]).stdout);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn selftest_subset_passes() {
    let o = run(&["selftest", "--only", "1,2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["all_passed"], true);
}
