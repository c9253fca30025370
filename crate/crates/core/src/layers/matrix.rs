use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::red_basis;
use crate::algnum::{all_roots, AlgNum, BetaContext};
use crate::error::Result;
use crate::pcfun::{ExactModel, ExactPc};

/// Matrix of 𝒫 on span{F_0, …, F_{n−1}}; column j holds 𝒫F_j.
#[derive(Clone, Debug)]
pub struct TransferMatrix {
    pub entries: Vec<Vec<AlgNum>>,
}

pub fn transfer_matrix(ctx: &BetaContext) -> TransferMatrix {
    let n = ctx.n();
    let q = BigRational::from_integer(ctx.q().into());
    let mut entries = vec![vec![AlgNum::zero(ctx); n]; n];
    for (i, row) in entries.iter_mut().enumerate() {
        row[0] = ctx.inv_beta_pow(i as u32 + 1).scale(&q);
        if i + 1 < n {
            row[i + 1] = AlgNum::one(ctx);
        }
    }
    TransferMatrix { entries }
}

impl TransferMatrix {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn column_sums(&self) -> Vec<AlgNum> {
        let n = self.n();
        (0..n)
            .map(|j| {
                self.entries
                    .iter()
                    .fold(AlgNum::zero(self.entries[0][0].ctx()), |acc, row| &acc + &row[j])
            })
            .collect()
    }

    pub fn is_left_stochastic(&self) -> bool {
        let one = AlgNum::one(self.entries[0][0].ctx());
        self.column_sums().iter().all(|s| s.value_eq(&one))
            && self.entries.iter().flatten().all(|e| e.sign() != std::cmp::Ordering::Less)
    }

    /// Checks 𝒫F_j = Σ_i T_ij F_i against the piecewise-constant action.
    pub fn matches_operator(&self) -> Result<bool> {
        let ctx = self.entries[0][0].ctx().clone();
        let n = self.n();
        let basis: Vec<ExactPc> = (0..n).map(|r| red_basis(&ctx, r)).collect::<Result<_>>()?;
        for j in 0..n {
            let lhs = basis[j].transfer();
            let mut rhs = ExactPc::constant(ExactModel::new(&ctx), AlgNum::zero(&ctx));
            for (i, f) in basis.iter().enumerate() {
                rhs = rhs.add(&f.scale(&self.entries[i][j]));
            }
            if !lhs.equals(&rhs) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| Complex64::new(self.entries[i][j].to_f64(), 0.0))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralData {
    pub n: usize,
    pub q: u32,
    /// λ₁ = 1 first, the rest by decreasing modulus.
    pub eigenvalues: Vec<(f64, f64)>,
    pub lambda2_mod: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub window_holds: bool,
    /// Decay exponent from balancing |λ₂|^{N−M} against β^{−M}.
    pub k2: f64,
    /// Closed form (2 − ln q/ln β)/(3 − ln q/ln β), n = 2 only.
    pub k2_closed_form: Option<f64>,
    /// max over sample points of |det(zI − 𝒯)βⁿ − P(zβ)| / (1 + Σ|p_k||zβ|^k)
    pub det_identity_residual: f64,
}

/// Relative slack for the lower window bound, which is attained when all
/// non-leading roots share one modulus (always for n = 2).
const WINDOW_SLACK: f64 = 1e-12;

pub fn spectral_data(ctx: &BetaContext, tol: f64) -> Result<SpectralData> {
    let n = ctx.n();
    let q = ctx.q() as f64;
    let beta = ctx.beta_f64();
    let report = all_roots(ctx, 1e-10)?;
    let mut eig: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    eig.extend(report.other_roots.iter().map(|r| r.value() / beta));
    let lambda2_mod = eig.get(1).map(|z| z.norm()).unwrap_or(0.0);
    let window_lo = q.powf(1.0 / (n as f64 - 1.0)) * beta.powf(-(n as f64) / (n as f64 - 1.0));
    let window_hi = 1.0 / beta;
    let window_holds =
        window_lo <= lambda2_mod * (1.0 + WINDOW_SLACK) && lambda2_mod < window_hi;

    let l = -lambda2_mod.ln();
    let k2 = l / (beta.ln() + l);
    let k2_closed_form = (n == 2).then(|| {
        let r = q.ln() / beta.ln();
        (2.0 - r) / (3.0 - r)
    });

    let m = transfer_matrix(ctx).to_complex();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001 ^ ((n as u64) << 8) ^ ctx.q() as u64);
    let mut residual = 0.0f64;
    for _ in 0..10 {
        let r = rng.random::<f64>().sqrt();
        let th = rng.random::<f64>() * std::f64::consts::TAU;
        let z = Complex64::from_polar(r, th);
        let zi = DMatrix::<Complex64>::identity(n, n) * z - &m;
        let lhs = zi.determinant() * beta.powi(n as i32);
        let w = z * beta;
        let mut rhs = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for (k, &c) in ctx.p_coeffs().iter().enumerate() {
            rhs += w.powu(k as u32) * c as f64;
            mag += (c as f64).abs() * w.norm().powi(k as i32);
        }
        residual = residual.max((lhs - rhs).norm() / (1.0 + mag));
    }
    let _ = tol;
    Ok(SpectralData {
        n,
        q: ctx.q(),
        eigenvalues: eig.iter().map(|z| (z.re, z.im)).collect(),
        lambda2_mod,
        window_lo,
        window_hi,
        window_holds,
        k2,
        k2_closed_form,
        det_identity_residual: residual,
    })
}

#[derive(Clone, Debug)]
pub struct InvariantDensity {
    pub u1: ExactPc,
    /// s_1 = 1, s_{k+1} = s_k − qβ^{-k}
    pub s_coeffs: Vec<AlgNum>,
}

impl InvariantDensity {
    /// 𝒫u₁ = u₁, ∫u₁ = 1 and u₁ > 0, all exactly.
    pub fn verify(&self) -> bool {
        let one = AlgNum::one(self.u1.ctx());
        self.u1.transfer().equals(&self.u1)
            && self.u1.integrate().value_eq(&one)
            && self.u1.values().iter().all(|v| v.sign() == std::cmp::Ordering::Greater)
    }

    /// χ_{[0,1]} is fixed by the adjoint: 𝔎χ = χ and ⟨𝒫F_r, χ⟩ = ⟨F_r, χ⟩.
    pub fn verify_adjoint_fixed_point(&self) -> Result<bool> {
        let ctx = self.u1.ctx();
        let chi = ExactPc::one(ctx);
        if !chi.koopman().equals(&chi) {
            return Ok(false);
        }
        for r in 0..ctx.n() {
            let f = red_basis(ctx, r)?;
            if !f.transfer().inner_product(&chi).value_eq(&f.inner_product(&chi)) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn invariant_density(ctx: &BetaContext) -> Result<InvariantDensity> {
    let n = ctx.n();
    let q = BigRational::from_integer(ctx.q().into());
    let mut s = vec![AlgNum::one(ctx)];
    for k in 1..n {
        let next = &s[k - 1] - &ctx.inv_beta_pow(k as u32).scale(&q);
        s.push(next);
    }
    let total = s.iter().fold(AlgNum::zero(ctx), |a, b| &a + b);
    let mut u = ExactPc::constant(ExactModel::new(ctx), AlgNum::zero(ctx));
    for (r, sr) in s.iter().enumerate() {
        u = u.add(&red_basis(ctx, r)?.scale(sr));
    }
    let inv_total = total.inv()?;
    Ok(InvariantDensity { u1: u.scale(&inv_total), s_coeffs: s })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_matrix_and_spectrum() {
        let ctx = BetaContext::with_default_tol(2, 1).unwrap();
        let t = transfer_matrix(&ctx);
        assert!(t.entries[0][0].value_eq(&ctx.inv_beta()));
        assert!(t.entries[0][1].value_eq(&AlgNum::one(&ctx)));
        assert!(t.entries[1][0].value_eq(&ctx.inv_beta_pow(2)));
        assert!(t.entries[1][1].is_zero());
        assert!(t.is_left_stochastic());
        assert!(t.matches_operator().unwrap());
        let sd = spectral_data(&ctx, 1e-10).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((sd.eigenvalues[1].0 + phi.powi(-2)).abs() < 1e-14);
        assert!((sd.lambda2_mod - 0.381_966_011_3).abs() < 1e-10);
        assert!((sd.window_lo - sd.lambda2_mod).abs() < 1e-15);
        assert!(sd.window_holds);
        assert!((sd.k2 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(sd.k2_closed_form, Some(2.0 / 3.0));
        assert!(sd.det_identity_residual <= 1e-12);
    }

    #[test]
    fn k2_forms_agree_for_n_two() {
        for q in 1..=5 {
            let ctx = BetaContext::with_default_tol(2, q).unwrap();
            let sd = spectral_data(&ctx, 1e-10).unwrap();
            assert!((sd.k2 - sd.k2_closed_form.unwrap()).abs() < 1e-12);
            let b = ctx.beta_f64();
            assert!((sd.lambda2_mod - q as f64 / (b * b)).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_density_values() {
        let ctx = BetaContext::with_default_tol(2, 1).unwrap();
        let d = invariant_density(&ctx).unwrap();
        assert!(d.verify());
        assert!(d.verify_adjoint_fixed_point().unwrap());
        let v: Vec<f64> = d.u1.values().iter().map(|v| v.to_f64()).collect();
        // s = (1, β⁻²) normalized by 2 − β⁻¹
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let norm = 2.0 - 1.0 / phi;
        assert!((v[0] - phi / norm).abs() < 1e-12 && (v[0] - 1.170_820_393_2).abs() < 1e-10);
        assert!((v[1] - 1.0 / norm).abs() < 1e-12 && (v[1] - 0.723_606_797_7).abs() < 1e-10);
    }

    #[test]
    fn density_fixed_point_tribonacci() {
        let ctx = BetaContext::with_default_tol(3, 1).unwrap();
        let d = invariant_density(&ctx).unwrap();
        assert!(d.u1.transfer().sub(&d.u1).values().iter().all(|v| v.is_zero()));
        assert!(d.verify());
        // s_n = qβ^{-n}
        assert!(d.s_coeffs[2].value_eq(&ctx.inv_beta_pow(3)));
    }
}
