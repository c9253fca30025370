//! One test per acceptance criterion. Each prints a single PASS/FAIL line
//! (run with `--nocapture` to see the sub-check details).

use betadyn::selftest::{run_criterion, CriterionResult};

fn run(id: usize) -> CriterionResult {
    let r = run_criterion(id);
    println!("{}", r.line());
    for c in &r.checks {
        println!("    [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
    r
}

macro_rules! criterion {
    ($name:ident, $id:expr) => {
        #[test]
        fn $name() {
            let r = run($id);
            assert!(r.passed, "{}", r.report());
        }
    };
}

criterion!(criterion_01_beta_fixtures, 1);
criterion!(criterion_02_pisot_certification, 2);
criterion!(criterion_03_greedy_exactness, 3);
criterion!(criterion_04_classification, 4);
criterion!(criterion_05_basis_action, 5);
criterion!(criterion_06_invariant_density, 6);
criterion!(criterion_07_spectral_identities, 7);
criterion!(criterion_08_lipschitz_decay_envelope, 8);
criterion!(criterion_09_psi0_annihilated, 9);
criterion!(criterion_10_eigenfunction_residual, 10);
criterion!(criterion_11_duality_and_isometry, 11);
criterion!(criterion_12_correlation_decay, 12);
criterion!(criterion_13_stochastic_corroboration, 13);
