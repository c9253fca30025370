use anyhow::{bail, Context, Result};
use betadyn::algnum::all_roots;
use betadyn::expansion::{
    classify_representation, format_digits, greedy_digits, greedy_digits_f64, parse_digits, parse_point,
    validate_digits, ValidityReport,
};
use betadyn::fmt::f64_sig17;
use betadyn::layers::{
    approx_partition, approximate_lipschitz_exact, invariant_density, iterate_transfer, spectral_data,
    transfer_matrix, DecayOptions, DEFAULT_LEAF_CAP,
};
use betadyn::pcfun::{ExactModel, ExactPc};
use betadyn::pexp::{eigenfunction, eigenfunction_grid, psi0, DEFAULT_PIECE_CAP};
use betadyn::selftest;
use betadyn::stochastic::{
    correlation_exact, correlation_monte_carlo, ergodic_average, orbit_average_exact, Observable,
};
use betadyn::{AlgNum, BetaContext};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::FromPrimitive;
use serde_json::{json, Value};

use crate::output::{emit, table, Format, Meta, Output};
use crate::{Command, Common, Mode, EXIT_VALIDATION};

fn context(c: &Common) -> Result<BetaContext> {
    let ctx = match c.tol {
        Some(t) => {
            let tol = BigRational::from_f64(t).context("tolerance must be a finite number")?;
            BetaContext::new(c.n, c.q, &tol)?
        }
        None => BetaContext::with_default_tol(c.n, c.q)?,
    };
    Ok(ctx)
}

/// Rational, decimal, `1/beta`, or `beta^-k`.
fn parse_cli_point(ctx: &BetaContext, s: &str) -> Result<AlgNum> {
    let s = s.trim();
    if s == "1/beta" {
        return Ok(ctx.inv_beta());
    }
    if let Some(k) = s.strip_prefix("beta^-") {
        let k: u32 = k.parse().with_context(|| format!("bad exponent in {s:?}"))?;
        return Ok(ctx.inv_beta_pow(k));
    }
    Ok(parse_point(ctx, s)?)
}

fn parse_observable(ctx: &BetaContext, s: &str) -> Result<Observable> {
    if s == "x" {
        return Ok(Observable::Identity);
    }
    if let Some(c) = s.strip_prefix("const:") {
        return Ok(Observable::Constant(c.parse().with_context(|| format!("bad constant {c:?}"))?));
    }
    if let Some(rest) = s.strip_prefix("chi:") {
        let (a, b) = rest.split_once(',').context("chi needs two endpoints: chi:a,b")?;
        let (a, b) = (parse_cli_point(ctx, a)?, parse_cli_point(ctx, b)?);
        if a.sign() == std::cmp::Ordering::Less || b > AlgNum::one(ctx) || a >= b {
            return Err(betadyn::Error::Domain("chi:a,b needs 0 <= a < b <= 1".into()).into());
        }
        return Ok(Observable::Indicator(a, b));
    }
    Err(betadyn::Error::InvalidParameter(format!("unknown observable {s:?}")).into())
}

fn mode_name(m: Mode, float: bool) -> &'static str {
    match (m, float) {
        (Mode::Float, _) | (_, true) => "float",
        _ => "exact",
    }
}

pub fn dispatch(c: &Common, cmd: &Command) -> Result<u8> {
    let ctx = context(c)?;
    let mut format = c.format;
    let mut code = 0;
    let out = match cmd {
        Command::Ctx => cmd_ctx(c, &ctx)?,
        Command::Expand { x, digits } => cmd_expand(c, &ctx, x, *digits)?,
        Command::Validate { digits } => {
            let (o, ok) = cmd_validate(c, &ctx, digits)?;
            if !ok {
                code = EXIT_VALIDATION;
            }
            o
        }
        Command::Classify { preamble, period } => cmd_classify(c, &ctx, preamble, period)?,
        Command::Density => cmd_density(c, &ctx)?,
        Command::Spectrum => cmd_spectrum(c, &ctx)?,
        Command::Partition { m } => cmd_partition(c, &ctx, *m)?,
        Command::Iterate { m, n_max, f } => cmd_iterate(c, &ctx, *m, *n_max, f)?,
        Command::Eigen { z, trunc, grid, samples } => cmd_eigen(c, &ctx, z, *trunc, *grid, *samples)?,
        Command::Psi0 => cmd_psi0(c, &ctx)?,
        Command::Correlate { g, max_lag, m, samples } => cmd_correlate(c, &ctx, g, *max_lag, *m, *samples)?,
        Command::Ergodic { horizons, starts, g, x0 } => cmd_ergodic(c, &ctx, horizons, *starts, g, x0.as_deref())?,
        Command::Selftest { json, only } => {
            if *json {
                format = Format::Json;
            }
            let (o, ok) = cmd_selftest(c, &ctx, only)?;
            if !ok {
                code = EXIT_VALIDATION;
            }
            o
        }
    };
    emit(&out.render(format), c.out.as_deref())?;
    Ok(code)
}

fn cmd_ctx(c: &Common, ctx: &BetaContext) -> Result<Output> {
    let rep = all_roots(ctx, 1e-10)?;
    let pisot = rep.passes();
    let meta = Meta::new("ctx", ctx, "exact", c.seed, json!({}));
    let roots: Vec<Vec<String>> = rep
        .other_roots
        .iter()
        .map(|r| vec![f64_sig17(r.re), f64_sig17(r.im), f64_sig17(r.modulus())])
        .collect();
    let mut tab = format!(
        "beta ≈ {}\nbeta (30 places) = {}\nP coefficients (ascending) = {:?}\nPisot: {}\nannulus lower bound = {}\n",
        f64_sig17(ctx.beta_f64()),
        ctx.beta_decimal(30),
        ctx.p_coeffs(),
        if pisot { "yes" } else { "no" },
        f64_sig17(rep.annulus_lo)
    );
    tab.push_str(&table(&["re", "im", "modulus"], &roots));
    let mut csv = String::from("root,re,im,modulus\n");
    csv.push_str(&format!("beta,{},0,{}\n", f64_sig17(ctx.beta_f64()), f64_sig17(ctx.beta_f64())));
    for (i, r) in roots.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 2, r.join(",")));
    }
    Ok(Output {
        meta,
        json: json!({ "context": ctx.record(), "pisot": pisot, "report": rep }),
        csv,
        table: tab,
    })
}

fn cmd_expand(c: &Common, ctx: &BetaContext, x: &str, digits: usize) -> Result<Output> {
    let xv = parse_cli_point(ctx, x)?;
    if xv.sign() == std::cmp::Ordering::Less || xv >= AlgNum::one(ctx) {
        return Err(betadyn::Error::Domain(format!("x = {x} must lie in [0,1)")).into());
    }
    let float = c.mode == Mode::Float;
    let seq = if float { greedy_digits_f64(ctx, xv.to_f64(), digits)? } else { greedy_digits(&xv, digits)? };
    let d = format_digits(&seq.digits);
    let meta = Meta::new("expand", ctx, mode_name(c.mode, float), c.seed, json!({ "x": x, "digits": digits }));
    let rem = match &seq.remainder {
        Some(r) => r.to_decimal(30),
        None => f64_sig17(seq.remainder_f64),
    };
    Ok(Output {
        meta,
        json: json!({ "digits": seq.digits, "remainder": rem, "validity": seq.validate() }),
        csv: format!("{d}\n"),
        table: format!("digits: {d}\nremainder T^{digits}(x) = {rem}\n"),
    })
}

fn cmd_validate(c: &Common, ctx: &BetaContext, digits: &str) -> Result<(Output, bool)> {
    let d = parse_digits(digits)?;
    let rep = validate_digits(ctx, &d);
    let ok = !matches!(rep, ValidityReport::Invalid { .. });
    let text = match &rep {
        ValidityReport::Valid => "valid".to_string(),
        ValidityReport::Invalid { restriction, index } => {
            format!("invalid: restriction {restriction} fails at digit {index}")
        }
        ValidityReport::Suspect { index, length } => {
            format!("undecided: digits {index}.. follow the quasi-greedy tail for {length} places")
        }
    };
    let meta = Meta::new("validate", ctx, "exact", c.seed, json!({ "digits": digits }));
    let status = match rep {
        ValidityReport::Valid => "valid,,",
        ValidityReport::Invalid { .. } => "invalid",
        ValidityReport::Suspect { .. } => "suspect",
    };
    let csv = match &rep {
        ValidityReport::Valid => format!("status,restriction,index\n{status}\n"),
        ValidityReport::Invalid { restriction, index } => {
            format!("status,restriction,index\n{status},{restriction},{index}\n")
        }
        ValidityReport::Suspect { index, .. } => format!("status,restriction,index\n{status},3,{index}\n"),
    };
    Ok((Output { meta, json: serde_json::to_value(&rep)?, csv, table: format!("{text}\n") }, ok))
}

fn cmd_classify(c: &Common, ctx: &BetaContext, preamble: &str, period: &str) -> Result<Output> {
    let (p, r) = (parse_digits(preamble)?, parse_digits(period)?);
    let res = classify_representation(ctx, &p, &r)?;
    let meta = Meta::new("classify", ctx, "exact", c.seed, json!({ "preamble": preamble, "period": period }));
    let json: Value = serde_json::from_str(&res.to_json())?;
    let greedy = res.greedy_form.as_deref().map(format_digits).unwrap_or_default();
    let k = res.switch_index.map(|k| k.to_string()).unwrap_or_default();
    Ok(Output {
        meta,
        csv: format!("case,k,greedy,value\n{:?},{k},\"{greedy}\",{}\n", res.case, res.value.to_decimal(30)),
        table: format!(
            "case: {:?}\nk: {k}\ngreedy form: {greedy}\nvalue: {}\n",
            res.case,
            res.value.to_decimal(30)
        ),
        json: json!({ "classification": json, "value": res.value.to_decimal(30) }),
    })
}

fn cmd_density(c: &Common, ctx: &BetaContext) -> Result<Output> {
    let d = invariant_density(ctx)?;
    let float = c.mode == Mode::Float;
    let meta = Meta::new("density", ctx, mode_name(c.mode, float), c.seed, json!({}));
    let csv = if float { d.u1.to_float().to_csv() } else { d.u1.to_csv() };
    let rows: Vec<Vec<String>> = d
        .u1
        .cells()
        .map(|(a, b, v)| vec![a.to_decimal(20), b.to_decimal(20), v.to_decimal(20)])
        .collect();
    let sidecar: Value = serde_json::from_str(&d.u1.sidecar_json())?;
    Ok(Output {
        meta,
        json: json!({
            "cells": d.u1.cells().map(|(a, b, v)| json!({
                "left": a.to_decimal(30), "right": b.to_decimal(30), "value": v.to_decimal(30)
            })).collect::<Vec<_>>(),
            "s_coeffs": d.s_coeffs.iter().map(|s| s.to_decimal(30)).collect::<Vec<_>>(),
            "fixed_point_verified": d.verify(),
            "exact": sidecar,
        }),
        csv,
        table: table(&["left", "right", "u1"], &rows),
    })
}

fn cmd_spectrum(c: &Common, ctx: &BetaContext) -> Result<Output> {
    let t = transfer_matrix(ctx);
    let sd = spectral_data(ctx, 1e-10)?;
    let meta = Meta::new("spectrum", ctx, "exact", c.seed, json!({}));
    let mat: Vec<Vec<String>> = t.entries.iter().map(|r| r.iter().map(|e| e.to_decimal(20)).collect()).collect();
    let mut tab = String::from("transfer matrix (column j = P F_j):\n");
    for r in &mat {
        tab.push_str(&format!("  {}\n", r.join("  ")));
    }
    tab.push_str(&format!(
        "|lambda2| = {}\nwindow [{}, {}): {}\nK2 = {}\ndet identity residual = {:.3e}\n",
        f64_sig17(sd.lambda2_mod),
        f64_sig17(sd.window_lo),
        f64_sig17(sd.window_hi),
        if sd.window_holds { "holds" } else { "violated" },
        f64_sig17(sd.k2),
        sd.det_identity_residual
    ));
    let rows: Vec<Vec<String>> = sd
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, (re, im))| vec![(i + 1).to_string(), f64_sig17(*re), f64_sig17(*im), f64_sig17(re.hypot(*im))])
        .collect();
    tab.push_str(&table(&["i", "re", "im", "modulus"], &rows));
    let mut csv = String::from("i,re,im,modulus\n");
    for r in &rows {
        csv.push_str(&r.join(","));
        csv.push('\n');
    }
    Ok(Output {
        meta,
        json: json!({ "matrix": mat, "left_stochastic": t.is_left_stochastic(), "spectral": sd }),
        csv,
        table: tab,
    })
}

fn cmd_partition(c: &Common, ctx: &BetaContext, m: usize) -> Result<Output> {
    let leaves = approx_partition(ctx, m, DEFAULT_LEAF_CAP)?;
    let float = c.mode == Mode::Float;
    let meta = Meta::new("partition", ctx, mode_name(c.mode, float), c.seed, json!({ "M": m }));
    let left = |a: &AlgNum| if float { f64_sig17(a.to_f64()) } else { a.to_decimal(30) };
    let rows: Vec<Vec<String>> = leaves
        .iter()
        .map(|l| vec![left(&l.left), l.weight.to_string(), format!("{}", l.index)])
        .collect();
    let mut csv = String::from("left,weight,index\n");
    for r in &rows {
        csv.push_str(&format!("{},{},\"{}\"\n", r[0], r[1], r[2]));
    }
    Ok(Output {
        meta,
        json: json!({
            "leaf_count": leaves.len(),
            "leaves": leaves.iter().map(|l| json!({ "left": left(&l.left), "weight": l.weight, "k": l.index.k, "j": l.index.j })).collect::<Vec<_>>(),
        }),
        csv,
        table: format!("{} leaves\n{}", leaves.len(), table(&["left", "weight", "index"], &rows)),
    })
}

fn cmd_iterate(c: &Common, ctx: &BetaContext, m: usize, n_max: usize, f: &str) -> Result<Output> {
    let beta = ctx.beta_f64();
    let half = parse_point(ctx, "1/2")?;
    // (interpolant, Lipschitz constant, ∫f)
    let (pc, lip, mass) = match f {
        "x" => (approximate_lipschitz_exact(ctx, |x| x.clone(), m, DEFAULT_LEAF_CAP)?, 1.0, half),
        "sin" => {
            let pc = approximate_lipschitz_exact(
                ctx,
                |x| AlgNum::from_rational(ctx, BigRational::from_f64(x.to_f64().sin()).expect("finite")),
                m,
                DEFAULT_LEAF_CAP,
            )?;
            let mass = BigRational::from_f64(1.0 - 1f64.cos()).expect("finite");
            (pc, 1.0, AlgNum::from_rational(ctx, mass))
        }
        s => match s.strip_prefix("const:") {
            Some(v) => {
                let a = parse_point(ctx, v)?;
                (ExactPc::constant(ExactModel::new(ctx), a.clone()), 0.0, a)
            }
            None => bail!(betadyn::Error::InvalidParameter(format!("unknown function {s:?}; use x, sin or const:c"))),
        },
    };
    let opts = DecayOptions::for_context(ctx, lip * beta.powi(-(m as i32)))?;
    let r = iterate_transfer(ctx, &pc, n_max, &mass, &opts)?;
    let mode = if r.fallback_at.is_some() { "exact+dyadic-fallback" } else { "exact" };
    let meta = Meta::new("iterate", ctx, mode, c.seed, json!({ "M": m, "N": n_max, "f": f }));
    let rows: Vec<Vec<String>> = r
        .errors
        .iter()
        .enumerate()
        .map(|(n, e)| vec![n.to_string(), f64_sig17(*e), f64_sig17(r.envelope(n))])
        .collect();
    let mut summary = r.summary_json();
    summary["errors"] = json!(r.errors);
    Ok(Output {
        meta,
        table: format!(
            "{}fitted rate {:?}, K1_fitted {}, plateau {}\n",
            table(&["N", "l1_error", "envelope"], &rows),
            r.fitted_rate,
            f64_sig17(r.k1_fitted),
            f64_sig17(r.plateau_level)
        ),
        csv: r.to_csv(),
        json: summary,
    })
}

fn parse_z(s: &str) -> Result<Complex64> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re: f64 = re.trim().parse().with_context(|| format!("bad real part {re:?}"))?;
    let im: f64 = im.trim().parse().with_context(|| format!("bad imaginary part {im:?}"))?;
    Ok(Complex64::new(re, im))
}

fn cmd_eigen(
    c: &Common,
    ctx: &BetaContext,
    z: &str,
    trunc: usize,
    grid: Option<usize>,
    samples: usize,
) -> Result<Output> {
    let zc = parse_z(z)?;
    let rep = match grid {
        Some(points) => eigenfunction_grid(ctx, zc, trunc, points)?,
        None => match eigenfunction(ctx, zc, trunc, DEFAULT_PIECE_CAP) {
            Err(e) if e.is_resource() => {
                eigenfunction_grid(ctx, zc, trunc, betadyn::pexp::DEFAULT_GRID_POINTS)?
            }
            r => r?,
        },
    };
    let meta = Meta::new("eigen", ctx, rep.mode, c.seed, json!({ "z": [zc.re, zc.im], "M_trunc": trunc }));
    let pts: Vec<(f64, Complex64)> = match (&rep.psi, &rep.grid) {
        (Some(p), _) => p.sample(samples),
        (None, Some(g)) => {
            let step = (g.len() / samples.max(1)).max(1);
            g.iter().step_by(step).copied().collect()
        }
        _ => Vec::new(),
    };
    let mut csv = String::from("t,re,im\n");
    for (t, v) in &pts {
        csv.push_str(&format!("{},{},{}\n", f64_sig17(*t), f64_sig17(v.re), f64_sig17(v.im)));
    }
    let table = format!(
        "z = {zc}, M_trunc = {trunc}, mode = {}\nresidual ||P psi - z psi||_2 = {}\npredicted |z|^(M+1) ||u1^(1/2) W^M u1^(-1/2) psi0||_2 = {}\nmax isometry defect = {:.3e}\n",
        rep.mode,
        rep.residual_l2.map(f64_sig17).unwrap_or_else(|| "n/a".into()),
        f64_sig17(rep.residual_bound),
        rep.isometry_defects.iter().copied().fold(0.0, f64::max)
    );
    Ok(Output {
        meta,
        json: json!({
            "z": [zc.re, zc.im],
            "M_trunc": trunc,
            "residual_l2": rep.residual_l2,
            "residual_bound": rep.residual_bound,
            "mode": rep.mode,
            "isometry_defects": rep.isometry_defects,
            "piece_counts": rep.piece_counts,
        }),
        csv,
        table,
    })
}

fn cmd_psi0(c: &Common, ctx: &BetaContext) -> Result<Output> {
    let p = psi0(ctx);
    let meta = Meta::new("psi0", ctx, "float", c.seed, json!({}));
    let pieces = p.pieces();
    let rows: Vec<Vec<String>> = pieces
        .iter()
        .map(|x| vec![f64_sig17(x.a), f64_sig17(x.b), f64_sig17(x.amp.re), f64_sig17(x.amp.im), f64_sig17(x.freq)])
        .collect();
    let mut csv = String::from("a,b,re,im,freq\n");
    for r in &rows {
        csv.push_str(&r.join(","));
        csv.push('\n');
    }
    let residual = p.transfer().norm2();
    Ok(Output {
        meta,
        json: json!({ "pieces": pieces, "transfer_l2": residual }),
        csv,
        table: format!(
            "{}||P psi0||_2 = {:.3e}\n",
            table(&["a", "b", "re", "im", "freq"], &rows),
            residual
        ),
    })
}

fn cmd_correlate(
    c: &Common,
    ctx: &BetaContext,
    g: &str,
    max_lag: usize,
    m: usize,
    samples: Option<usize>,
) -> Result<Output> {
    let obs = parse_observable(ctx, g)?;
    let pc = match &obs {
        Observable::Identity => approximate_lipschitz_exact(ctx, |x| x.clone(), m, DEFAULT_LEAF_CAP)?,
        Observable::Constant(v) => ExactPc::constant(
            ExactModel::new(ctx),
            AlgNum::from_rational(ctx, BigRational::from_f64(*v).context("finite constant")?),
        ),
        Observable::Indicator(a, b) => ExactPc::indicator(ExactModel::new(ctx), a.clone(), b.clone(), AlgNum::one(ctx))?,
    };
    let k2 = spectral_data(ctx, 1e-10)?.k2;
    let label = obs.label();
    let r = match samples {
        Some(s) => correlation_monte_carlo(ctx, &pc, max_lag, k2, c.seed, s, &label)?,
        None => correlation_exact(ctx, &pc, max_lag, k2, &label)?,
    };
    let mode = if samples.is_some() { "float" } else { "exact" };
    let meta = Meta::new("correlate", ctx, mode, c.seed, json!({ "g": g, "max_lag": max_lag, "samples": samples }));
    let rows: Vec<Vec<String>> = r
        .lags
        .iter()
        .map(|l| vec![l.lag.to_string(), f64_sig17(l.covariance), f64_sig17(l.bound)])
        .collect();
    Ok(Output {
        meta,
        table: format!(
            "g = {label}, mean = {}, method = {}, K1_fitted = {}, K2 = {}\n{}",
            f64_sig17(r.mean),
            r.method,
            f64_sig17(r.k1_fitted),
            f64_sig17(r.k2),
            table(&["lag", "covariance", "bound"], &rows)
        ),
        csv: r.to_csv(),
        json: serde_json::to_value(&r)?,
    })
}

fn cmd_ergodic(
    c: &Common,
    ctx: &BetaContext,
    horizons: &[usize],
    starts: usize,
    g: &str,
    x0: Option<&str>,
) -> Result<Output> {
    let obs = parse_observable(ctx, g)?;
    let r = ergodic_average(ctx, &obs, c.seed, starts, horizons)?;
    let orbit = match x0 {
        Some(x) => {
            let n = horizons.iter().copied().max().unwrap_or(1000).min(3000);
            Some(orbit_average_exact(ctx, &obs, &parse_cli_point(ctx, x)?, n)?)
        }
        None => None,
    };
    let meta = Meta::new(
        "ergodic",
        ctx,
        "float",
        c.seed,
        json!({ "g": g, "N": horizons, "starts": starts, "x0": x0 }),
    );
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|x| vec![x.n.to_string(), f64_sig17(x.mean_deviation), f64_sig17(x.variance), f64_sig17(x.variance_times_n)])
        .collect();
    let mut tab = format!(
        "g = {}, target mean = {}\n{}",
        r.g,
        f64_sig17(r.target),
        table(&["N", "mean(A_N - M)", "E(A_N - M)^2", "N E(A_N - M)^2"], &rows)
    );
    if let Some(o) = &orbit {
        tab.push_str(&format!(
            "orbit of {}: average {} vs target {}{}\n",
            o.start,
            f64_sig17(o.average),
            f64_sig17(o.target),
            match o.period {
                Some(p) => format!(" (periodic with period {p}: exceptional orbit)"),
                None => String::new(),
            }
        ));
    }
    Ok(Output {
        meta,
        csv: r.to_csv(),
        json: json!({ "report": r, "orbit": orbit }),
        table: tab,
    })
}

fn cmd_selftest(c: &Common, ctx: &BetaContext, only: &[usize]) -> Result<(Output, bool)> {
    let ids: Vec<usize> = if only.is_empty() { (1..=selftest::CRITERIA).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > selftest::CRITERIA) {
        bail!(betadyn::Error::InvalidParameter(format!("no criterion {bad}")));
    }
    let results: Vec<_> = ids.iter().map(|&i| selftest::run_criterion(i)).collect();
    let ok = results.iter().all(|r| r.passed);
    let meta = Meta::new("selftest", ctx, "exact", c.seed, json!({ "criteria": ids }));
    let mut tab = String::new();
    let mut csv = String::from("criterion,title,passed\n");
    for r in &results {
        tab.push_str(&r.report());
        tab.push('\n');
        csv.push_str(&format!("{},{},{}\n", r.id, r.title, r.passed));
    }
    tab.push_str(&format!(
        "{} of {} criteria passed\n",
        results.iter().filter(|r| r.passed).count(),
        results.len()
    ));
    Ok((
        Output { meta, json: json!({ "all_passed": ok, "criteria": results }), csv, table: tab },
        ok,
    ))
}
