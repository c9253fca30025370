use serde::Serialize;

use super::{invariant_density, spectral_data};
use crate::algnum::{AlgNum, BetaContext};
use crate::error::Result;
use crate::fmt::f64_sig17;
use crate::pcfun::ExactPc;

/// Coefficient bit length above which iteration rounds to the dyadic grid.
pub const DEFAULT_BIT_CAP: u64 = 10_000;
const FALLBACK_BITS: u64 = 256;

#[derive(Clone, Debug)]
pub struct DecayOptions {
    pub k2: f64,
    pub lambda2_mod: f64,
    /// Expected approximation floor, e.g. L_f·β^{−M}.
    pub floor: f64,
    pub bit_cap: u64,
}

impl DecayOptions {
    pub fn for_context(ctx: &BetaContext, floor: f64) -> Result<Self> {
        let sd = spectral_data(ctx, 1e-10)?;
        Ok(DecayOptions { k2: sd.k2, lambda2_mod: sd.lambda2_mod, floor, bit_cap: DEFAULT_BIT_CAP })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub beta: f64,
    pub k2: f64,
    pub lambda2_mod: f64,
    /// e_N = ‖𝒫^N f − u₁·mass‖₁ for N = 0..=N_max.
    pub errors: Vec<f64>,
    /// Least-squares slope of ln e_N over `fit_range`; None when fewer than
    /// two positive errors are available.
    pub fitted_rate: Option<f64>,
    pub fit_range: (usize, usize),
    pub k1_fitted: f64,
    pub plateau_level: f64,
    /// First N with e_N below twice the floor.
    pub plateau_index: Option<usize>,
    /// Iteration at which exact coefficients were rounded to 2^-256.
    pub fallback_at: Option<usize>,
}

impl DecayReport {
    pub fn envelope(&self, n: usize) -> f64 {
        self.k1_fitted * self.beta.powf(-self.k2 * n as f64)
    }

    pub fn non_increasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn within_envelope(&self) -> bool {
        self.errors.iter().enumerate().all(|(n, &e)| e <= self.envelope(n) * (1.0 + 1e-12))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,l1_error,envelope\n");
        for (n, &e) in self.errors.iter().enumerate() {
            out.push_str(&format!("{n},{},{}\n", f64_sig17(e), f64_sig17(self.envelope(n))));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "fitted_rate": self.fitted_rate,
            "K2": self.k2,
            "lambda2_mod": self.lambda2_mod,
            "K1_fitted": self.k1_fitted,
            "plateau_level": self.plateau_level,
            "plateau_index": self.plateau_index,
            "fallback_at": self.fallback_at,
        })
    }
}

fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Iterates 𝒫 on f and records the L¹ distance to u₁·mass.
pub fn iterate_transfer(
    ctx: &BetaContext,
    f: &ExactPc,
    n_max: usize,
    reference_mass: &AlgNum,
    opts: &DecayOptions,
) -> Result<DecayReport> {
    let target = invariant_density(ctx)?.u1.scale(reference_mass);
    let mut g = f.clone();
    let mut errors = Vec::with_capacity(n_max + 1);
    let mut fallback_at = None;
    for n in 0..=n_max {
        if n > 0 {
            g = g.transfer();
        }
        if g.bit_size() > opts.bit_cap {
            fallback_at.get_or_insert(n);
            g = g.map(|v| v.round_to_bits(FALLBACK_BITS));
        }
        errors.push(g.sub(&target).norm1_value().to_f64());
    }

    let plateau_index = errors.iter().position(|&e| e < 2.0 * opts.floor);
    let end = plateau_index.unwrap_or(errors.len());
    let pts: Vec<(f64, f64)> = errors[..end]
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0)
        .map(|(n, &e)| (n as f64, e.ln()))
        .collect();
    let beta = ctx.beta_f64();
    let k1_fitted = errors
        .iter()
        .enumerate()
        .map(|(n, &e)| e * beta.powf(opts.k2 * n as f64))
        .fold(0.0, f64::max);
    Ok(DecayReport {
        beta,
        k2: opts.k2,
        lambda2_mod: opts.lambda2_mod,
        plateau_level: *errors.last().unwrap_or(&0.0),
        fitted_rate: slope(&pts),
        fit_range: (0, end),
        k1_fitted,
        plateau_index,
        fallback_at,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::red_basis;

    #[test]
    fn fixed_point_has_zero_error() {
        let ctx = BetaContext::with_default_tol(2, 1).unwrap();
        let u = invariant_density(&ctx).unwrap().u1;
        let opts = DecayOptions::for_context(&ctx, 1e-6).unwrap();
        let r = iterate_transfer(&ctx, &u, 10, &AlgNum::one(&ctx), &opts).unwrap();
        assert!(r.errors.iter().all(|&e| e == 0.0));
        assert_eq!(r.fitted_rate, None);
    }

    #[test]
    fn red_basis_decays_at_lambda2() {
        let ctx = BetaContext::with_default_tol(2, 1).unwrap();
        let f = red_basis(&ctx, 1).unwrap();
        let opts = DecayOptions::for_context(&ctx, 0.0).unwrap();
        let r = iterate_transfer(&ctx, &f, 30, &AlgNum::one(&ctx), &opts).unwrap();
        // on a two-dimensional invariant subspace the error is c·|λ₂|^N exactly
        for w in r.errors.windows(2).skip(1) {
            assert!((w[1] / w[0] - opts.lambda2_mod).abs() < 1e-9);
        }
        assert!((r.fitted_rate.unwrap() - opts.lambda2_mod.ln()).abs() < 1e-6);
        assert!(r.non_increasing() && r.within_envelope());
    }

    #[test]
    fn fallback_is_flagged() {
        let ctx = BetaContext::with_default_tol(2, 1).unwrap();
        let f = red_basis(&ctx, 0).unwrap();
        let mut opts = DecayOptions::for_context(&ctx, 0.0).unwrap();
        opts.bit_cap = 1;
        let r = iterate_transfer(&ctx, &f, 5, &AlgNum::one(&ctx), &opts).unwrap();
        assert!(r.fallback_at.is_some());
        assert!(r.to_csv().starts_with("N,l1_error,envelope\n0,"));
    }
}
