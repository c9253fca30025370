//! Piecewise sums of complex exponentials on [0,1].
//!
//! On each cell `[b_i, b_{i+1})` the function is `Σ c·e^{iωt}` over a short
//! list of terms, with `t` the absolute coordinate. Breakpoints are exact
//! elements of ℚ(β); amplitudes and frequencies are doubles. This class is
//! closed under 𝒫, 𝔎 and multiplication by piecewise constants.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algnum::{AlgNum, BetaContext};
use crate::error::{Error, Result};
use crate::fmt::f64_sig17;
use crate::layers::invariant_density;
use crate::pcfun::ExactPc;

/// Frequencies closer than this (relative) are merged.
const FREQ_TOL: f64 = 1e-12;
pub const DEFAULT_PIECE_CAP: usize = 10_000_000;
pub const DEFAULT_GRID_POINTS: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Term {
    pub amp: Complex64,
    pub freq: f64,
}

impl Term {
    fn at(&self, t: f64) -> Complex64 {
        self.amp * Complex64::from_polar(1.0, self.freq * t)
    }
}

fn same_freq(a: f64, b: f64) -> bool {
    (a - b).abs() <= FREQ_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Adds two term lists (each sorted by frequency).
fn merge_terms(a: &[Term], b: &[Term]) -> Vec<Term> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].freq < b[j].freq && !same_freq(a[i].freq, b[j].freq)) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || (b[j].freq < a[i].freq && !same_freq(a[i].freq, b[j].freq)) {
            out.push(b[j]);
            j += 1;
        } else {
            out.push(Term { amp: a[i].amp + b[j].amp, freq: a[i].freq });
            i += 1;
            j += 1;
        }
    }
    out.retain(|t| t.amp != Complex64::new(0.0, 0.0));
    out
}

/// ∫_a^b e^{iΔt} dt, stable for small Δ·(b − a).
fn exp_integral(delta: f64, a: f64, b: f64) -> Complex64 {
    let w = b - a;
    let h = 0.5 * delta * w;
    let sinc = if h == 0.0 { 1.0 } else { h.sin() / h };
    Complex64::from_polar(w * sinc, delta * 0.5 * (a + b))
}

#[derive(Clone, Debug)]
pub struct PiecewiseExp {
    ctx: BetaContext,
    breaks: Vec<AlgNum>,
    breaks_f64: Vec<f64>,
    cells: Vec<Vec<Term>>,
}

/// One exported piece `amp·e^{i·freq·t}` on `[a, b)`.
#[derive(Clone, Debug, Serialize)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub amp: Complex64,
    pub freq: f64,
}

impl PiecewiseExp {
    fn build(ctx: &BetaContext, breaks: Vec<AlgNum>, cells: Vec<Vec<Term>>) -> Self {
        let mut nb = vec![breaks[0].clone()];
        let mut nc: Vec<Vec<Term>> = Vec::with_capacity(cells.len());
        for (i, c) in cells.into_iter().enumerate() {
            let right = &breaks[i + 1];
            if right.cmp(nb.last().unwrap()) != Ordering::Greater {
                continue;
            }
            if nc.last().is_some_and(|prev| *prev == c) {
                *nb.last_mut().unwrap() = right.clone();
                continue;
            }
            nb.push(right.clone());
            nc.push(c);
        }
        let breaks_f64 = nb.iter().map(|b| b.to_f64()).collect();
        PiecewiseExp { ctx: ctx.clone(), breaks: nb, breaks_f64, cells: nc }
    }

    pub fn zero(ctx: &BetaContext) -> Self {
        Self::build(ctx, vec![AlgNum::zero(ctx), AlgNum::one(ctx)], vec![vec![]])
    }

    /// Single exponential c·e^{iωt} on [a, b), zero elsewhere.
    pub fn single(ctx: &BetaContext, a: AlgNum, b: AlgNum, amp: Complex64, freq: f64) -> Result<Self> {
        if a.sign() == Ordering::Less || b > AlgNum::one(ctx) || a >= b {
            return Err(Error::InvalidParameter("piece needs 0 ≤ a < b ≤ 1".into()));
        }
        let breaks = vec![AlgNum::zero(ctx), a, b, AlgNum::one(ctx)];
        Ok(Self::build(ctx, breaks, vec![vec![], vec![Term { amp, freq }], vec![]]))
    }

    /// Frequency-zero lift of a piecewise-constant function.
    pub fn from_pc(f: &ExactPc) -> Self {
        let cells = f
            .values()
            .iter()
            .map(|v| {
                let x = v.to_f64();
                if x == 0.0 {
                    vec![]
                } else {
                    vec![Term { amp: Complex64::new(x, 0.0), freq: 0.0 }]
                }
            })
            .collect();
        Self::build(f.ctx(), f.breakpoints().to_vec(), cells)
    }

    pub fn ctx(&self) -> &BetaContext {
        &self.ctx
    }

    pub fn breakpoints(&self) -> &[AlgNum] {
        &self.breaks
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Number of (cell, frequency) pieces.
    pub fn piece_count(&self) -> usize {
        self.cells.iter().map(|c| c.len().max(1)).sum()
    }

    pub fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            for t in c {
                out.push(Piece {
                    a: self.breaks_f64[i],
                    b: self.breaks_f64[i + 1],
                    amp: t.amp,
                    freq: t.freq,
                });
            }
        }
        out
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let mut f: Vec<f64> = self.cells.iter().flatten().map(|t| t.freq).collect();
        f.sort_by(f64::total_cmp);
        f.dedup_by(|a, b| same_freq(*a, *b));
        f
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let i = self.breaks_f64[1..].partition_point(|&b| b <= t).min(self.cells.len() - 1);
        self.cells[i].iter().map(|term| term.at(t)).sum()
    }

    /// Values at `points` uniform grid points t = k/points.
    pub fn sample(&self, points: usize) -> Vec<(f64, Complex64)> {
        (0..points)
            .map(|k| {
                let t = k as f64 / points as f64;
                (t, self.eval(t))
            })
            .collect()
    }

    fn check_ctx(&self, other: &Self) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch);
        }
        Ok(())
    }

    /// Cellwise combination over the common refinement.
    fn zip_with(&self, other: &Self, op: impl Fn(&[Term], &[Term]) -> Vec<Term>) -> Self {
        let (a, b) = (&self.breaks, &other.breaks);
        let (na, nb) = (self.cells.len(), other.cells.len());
        let mut pts = vec![AlgNum::zero(&self.ctx)];
        let mut cells = Vec::with_capacity(na + nb);
        let (mut i, mut j) = (0, 0);
        while i < na && j < nb {
            cells.push(op(&self.cells[i], &other.cells[j]));
            match a[i + 1].cmp(&b[j + 1]) {
                Ordering::Less => {
                    pts.push(a[i + 1].clone());
                    i += 1;
                }
                Ordering::Greater => {
                    pts.push(b[j + 1].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    pts.push(a[i + 1].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        Self::build(&self.ctx, pts, cells)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_ctx(other)?;
        Ok(self.zip_with(other, merge_terms))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|c| {
                let mut v: Vec<Term> = c.iter().map(|t| Term { amp: t.amp * s, freq: t.freq }).collect();
                v.retain(|t| t.amp != Complex64::new(0.0, 0.0));
                v
            })
            .collect();
        Self::build(&self.ctx, self.breaks.clone(), cells)
    }

    fn sum(ctx: &BetaContext, fs: Vec<Self>) -> Self {
        let mut fs = fs;
        if fs.is_empty() {
            return Self::zero(ctx);
        }
        while fs.len() > 1 {
            let mut next = Vec::with_capacity(fs.len().div_ceil(2));
            let mut it = fs.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(a.zip_with(&b, merge_terms)),
                    None => next.push(a),
                }
            }
            fs = next;
        }
        fs.pop().unwrap()
    }

    /// Product with a real piecewise-constant function whose values are
    /// mapped through `g` first.
    pub fn mul_pc_with(&self, f: &ExactPc, g: impl Fn(&AlgNum) -> f64) -> Result<Self> {
        if f.ctx() != &self.ctx {
            return Err(Error::ContextMismatch);
        }
        let lifted = Self::build(
            &self.ctx,
            f.breakpoints().to_vec(),
            f.values().iter().map(|v| vec![Term { amp: Complex64::new(g(v), 0.0), freq: 0.0 }]).collect(),
        );
        Ok(self.zip_with(&lifted, |x, y| {
            let s = y.first().map(|t| t.amp).unwrap_or_default();
            let mut v: Vec<Term> = x.iter().map(|t| Term { amp: t.amp * s, freq: t.freq }).collect();
            v.retain(|t| t.amp != Complex64::new(0.0, 0.0));
            v
        }))
    }

    pub fn mul_pc(&self, f: &ExactPc) -> Result<Self> {
        self.mul_pc_with(f, |v| v.to_f64())
    }

    /// 𝒫ψ(x) = β⁻¹ Σ_j ψ((x+j)/β).
    pub fn transfer(&self) -> Self {
        let q = self.ctx.q();
        let branches: Vec<Self> = (0..=q).into_par_iter().map(|j| self.transfer_branch(j)).collect();
        Self::sum(&self.ctx, branches)
    }

    fn transfer_branch(&self, j: u32) -> Self {
        let ctx = &self.ctx;
        let q = ctx.q();
        let beta = ctx.beta_f64();
        let one = AlgNum::one(ctx);
        let lo = AlgNum::from_int(ctx, j as i64).div_beta();
        let hi = if j < q { AlgNum::from_int(ctx, j as i64 + 1).div_beta() } else { one.clone() };
        let image_end = if j < q { one.clone() } else { one.mul_beta().add_int(-(q as i64)) };
        let mut pts = vec![AlgNum::zero(ctx)];
        let mut cells = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            let (left, right) = (&self.breaks[i], &self.breaks[i + 1]);
            if *right <= lo {
                continue;
            }
            if *left >= hi {
                break;
            }
            if *left > lo {
                pts.push(left.mul_beta().add_int(-(j as i64)));
            }
            cells.push(
                c.iter()
                    .map(|t| Term {
                        amp: t.amp * Complex64::from_polar(1.0 / beta, t.freq * j as f64 / beta),
                        freq: t.freq / beta,
                    })
                    .collect(),
            );
        }
        pts.push(image_end.clone());
        if image_end < one {
            pts.push(one);
            cells.push(vec![]);
        }
        Self::build(ctx, pts, cells)
    }

    /// 𝔎ψ(x) = ψ(T(x)).
    pub fn koopman(&self) -> Self {
        let ctx = &self.ctx;
        let q = ctx.q();
        let beta = ctx.beta_f64();
        let one = AlgNum::one(ctx);
        let top = one.mul_beta().add_int(-(q as i64));
        let per_branch: Vec<(Vec<AlgNum>, Vec<Vec<Term>>)> = (0..=q)
            .into_par_iter()
            .map(|j| {
                let mut pts = Vec::new();
                let mut cells = Vec::new();
                for (i, c) in self.cells.iter().enumerate() {
                    if j == q && self.breaks[i] >= top {
                        break;
                    }
                    pts.push(self.breaks[i].add_int(j as i64).div_beta());
                    cells.push(
                        c.iter()
                            .map(|t| Term {
                                amp: t.amp * Complex64::from_polar(1.0, -t.freq * j as f64),
                                freq: t.freq * beta,
                            })
                            .collect(),
                    );
                }
                (pts, cells)
            })
            .collect();
        let mut pts = Vec::new();
        let mut cells = Vec::new();
        for (p, c) in per_branch {
            pts.extend(p);
            cells.extend(c);
        }
        pts.push(one);
        Self::build(ctx, pts, cells)
    }

    /// ⟨ψ₁, ψ₂⟩ = ∫ conj(ψ₁)ψ₂, in closed form per cell.
    pub fn inner_product(&self, other: &Self) -> Result<Complex64> {
        self.check_ctx(other)?;
        let (a, b) = (&self.breaks, &other.breaks);
        let mut acc = Complex64::new(0.0, 0.0);
        let (mut i, mut j) = (0, 0);
        let mut left = 0.0;
        while i < self.cells.len() && j < other.cells.len() {
            let ord = a[i + 1].cmp(&b[j + 1]);
            let right = match ord {
                Ordering::Greater => other.breaks_f64[j + 1],
                _ => self.breaks_f64[i + 1],
            };
            for s in &self.cells[i] {
                for t in &other.cells[j] {
                    acc += s.amp.conj() * t.amp * exp_integral(t.freq - s.freq, left, right);
                }
            }
            left = right;
            match ord {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(acc)
    }

    pub fn norm2(&self) -> f64 {
        self.inner_product(self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.cells.iter().map(|c| c.iter().map(|t| t.amp.norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Uniform-grid CSV `t,re,im`.
    pub fn to_csv(&self, points: usize) -> String {
        let mut out = String::from("t,re,im\n");
        for (t, v) in self.sample(points) {
            out.push_str(&format!("{},{},{}\n", f64_sig17(t), f64_sig17(v.re), f64_sig17(v.im)));
        }
        out
    }
}

/// x_j = q(β⁻² + … + β^{−n}) + j/β
fn x_point(ctx: &BetaContext, j: u32) -> AlgNum {
    let q = AlgNum::from_int(ctx, ctx.q() as i64);
    let mut s = AlgNum::zero(ctx);
    for k in 2..=ctx.n() as u32 {
        s = &s + &ctx.inv_beta_pow(k);
    }
    &(&s * &q) + &AlgNum::from_int(ctx, j as i64).div_beta()
}

/// The bounded function ψ₀ with 𝒫ψ₀ = 0.
pub fn psi0(ctx: &BetaContext) -> PiecewiseExp {
    let q = ctx.q();
    let beta = ctx.beta_f64();
    let one = Complex64::new(1.0, 0.0);
    let w1 = 2.0 * PI * beta / (q as f64 + 1.0);
    let w2 = 2.0 * PI * beta / q as f64;
    let mut pts = Vec::new();
    let mut cells = Vec::new();
    for j in 0..=q {
        pts.push(AlgNum::from_int(ctx, j as i64).div_beta());
        cells.push(vec![Term { amp: one, freq: w1 }]);
        if j < q {
            pts.push(x_point(ctx, j));
            // with q = 1 a single term cannot cancel, so this stretch is zero
            cells.push(if q == 1 { vec![] } else { vec![Term { amp: one, freq: w2 }] });
        }
    }
    pts.push(AlgNum::one(ctx));
    PiecewiseExp::build(ctx, pts, cells)
}

pub fn pexp_transfer(ctx: &BetaContext, psi: &PiecewiseExp) -> Result<PiecewiseExp> {
    if psi.ctx() != ctx {
        return Err(Error::ContextMismatch);
    }
    Ok(psi.transfer())
}

pub fn pexp_koopman(ctx: &BetaContext, psi: &PiecewiseExp, cap: usize) -> Result<PiecewiseExp> {
    if psi.ctx() != ctx {
        return Err(Error::ContextMismatch);
    }
    check_growth(psi, cap)?;
    Ok(psi.koopman())
}

pub fn pexp_mul_pc(psi: &PiecewiseExp, f: &ExactPc) -> Result<PiecewiseExp> {
    psi.mul_pc(f)
}

fn check_growth(psi: &PiecewiseExp, cap: usize) -> Result<()> {
    let predicted = psi.piece_count().saturating_mul(psi.ctx.q() as usize + 1);
    if predicted > cap {
        return Err(Error::ResourceCap(format!(
            "about {predicted} pieces exceed the cap of {cap}; use grid mode"
        )));
    }
    Ok(())
}

/// W = u₁^{1/2}𝔎u₁^{−1/2}, an isometry of L².
pub fn apply_w(psi: &PiecewiseExp, u1: &ExactPc) -> Result<PiecewiseExp> {
    psi.mul_pc_with(u1, |v| v.to_f64().sqrt().recip())?.koopman().mul_pc_with(u1, |v| v.to_f64().sqrt())
}

/// Truncated Neumann eigenfunction with its residual data.
#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    pub z: (f64, f64),
    pub m_trunc: usize,
    pub mode: &'static str,
    /// ‖𝒫ψ_z − zψ_z‖₂ computed from ψ_z (None in grid mode).
    pub residual_l2: Option<f64>,
    /// |z|^{M+1}·‖u₁^{1/2}W^M u₁^{−1/2}ψ₀‖₂
    pub residual_bound: f64,
    /// |‖W^{m+1}h‖₂ − ‖W^m h‖₂| for m < M, h = u₁^{−1/2}ψ₀.
    pub isometry_defects: Vec<f64>,
    pub piece_counts: Vec<usize>,
    #[serde(skip)]
    pub psi: Option<PiecewiseExp>,
    #[serde(skip)]
    pub grid: Option<Vec<(f64, Complex64)>>,
}

fn check_z(z: Complex64) -> Result<()> {
    if z.norm() >= 1.0 || !z.norm().is_finite() {
        return Err(Error::Domain(format!("|z| = {} must be below 1", z.norm())));
    }
    Ok(())
}

/// ψ_z^{(M)} = u₁^{1/2} Σ_{m≤M} z^m W^m u₁^{−1/2}ψ₀ and the exact norm of
/// its residual 𝒫ψ_z − zψ_z = −z^{M+1}u₁^{1/2}W^M u₁^{−1/2}ψ₀.
pub fn psi_z(ctx: &BetaContext, z: Complex64, m_trunc: usize, cap: usize) -> Result<(PiecewiseExp, f64)> {
    let r = eigenfunction(ctx, z, m_trunc, cap)?;
    Ok((r.psi.expect("piece mode"), r.residual_bound))
}

pub fn eigenfunction(ctx: &BetaContext, z: Complex64, m_trunc: usize, cap: usize) -> Result<EigenReport> {
    check_z(z)?;
    let u1 = invariant_density(ctx)?.u1;
    let mut v = psi0(ctx).mul_pc_with(&u1, |x| x.to_f64().sqrt().recip())?;
    let mut norms = vec![v.norm2()];
    let mut counts = vec![v.piece_count()];
    let mut acc = v.clone();
    let mut zm = Complex64::new(1.0, 0.0);
    for _ in 0..m_trunc {
        check_growth(&v, cap)?;
        v = apply_w(&v, &u1)?;
        zm *= z;
        acc = acc.add(&v.scale(zm))?;
        norms.push(v.norm2());
        counts.push(v.piece_count());
        if acc.piece_count() > cap {
            return Err(Error::ResourceCap(format!("ψ_z exceeds {cap} pieces; use grid mode")));
        }
    }
    let sqrt_u = |x: &AlgNum| x.to_f64().sqrt();
    let psi = acc.mul_pc_with(&u1, sqrt_u)?;
    let tail = v.mul_pc_with(&u1, sqrt_u)?.norm2();
    let bound = z.norm().powi(m_trunc as i32 + 1) * tail;
    let residual = psi.transfer().sub(&psi.scale(z))?.norm2();
    Ok(EigenReport {
        z: (z.re, z.im),
        m_trunc,
        mode: "pieces",
        residual_l2: Some(residual),
        residual_bound: bound,
        isometry_defects: norms.windows(2).map(|w| (w[1] - w[0]).abs()).collect(),
        piece_counts: counts,
        psi: Some(psi),
        grid: None,
    })
}

/// Grid evaluation ψ_z(t) = u₁(t) Σ z^m (ψ₀/u₁)(T^m t), for truncations
/// beyond the piece budget. Orbits are followed in double precision.
pub fn eigenfunction_grid(ctx: &BetaContext, z: Complex64, m_trunc: usize, points: usize) -> Result<EigenReport> {
    check_z(z)?;
    let u1 = invariant_density(ctx)?.u1.to_float();
    let p0 = psi0(ctx);
    let ratio = |t: f64| p0.eval(t) / u1.eval_f64(t);
    let beta = ctx.beta_f64();
    let samples: Vec<(f64, Complex64, f64)> = (0..points)
        .into_par_iter()
        .map(|k| {
            let t = (k as f64 + 0.5) / points as f64;
            let mut x = t;
            let mut zm = Complex64::new(1.0, 0.0);
            let mut s = ratio(x);
            for _ in 0..m_trunc {
                x = (beta * x).fract();
                zm *= z;
                s += zm * ratio(x);
            }
            let u = u1.eval_f64(t);
            // u₁^{1/2}W^M u₁^{−1/2}ψ₀ = u₁·(ψ₀/u₁)∘T^M
            (t, u * s, (u * ratio(x)).norm_sqr())
        })
        .collect();
    let tail = (samples.iter().map(|s| s.2).sum::<f64>() / points as f64).sqrt();
    Ok(EigenReport {
        z: (z.re, z.im),
        m_trunc,
        mode: "grid",
        residual_l2: None,
        residual_bound: z.norm().powi(m_trunc as i32 + 1) * tail,
        isometry_defects: vec![],
        piece_counts: vec![],
        psi: None,
        grid: Some(samples.into_iter().map(|s| (s.0, s.1)).collect()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn ctx(n: usize, q: u32) -> BetaContext {
        BetaContext::with_default_tol(n, q).unwrap()
    }

    #[test]
    fn psi0_has_2q_plus_1_pieces() {
        for (n, q) in [(2, 1), (2, 2), (3, 3), (4, 2)] {
            assert_eq!(psi0(&ctx(n, q)).cell_count(), 2 * q as usize + 1, "n={n} q={q}");
        }
    }

    #[test]
    fn psi0_golden_shape() {
        let c = ctx(2, 1);
        let p = psi0(&c);
        let b = c.beta_f64();
        let pcs = p.pieces();
        assert_eq!(pcs.len(), 2);
        assert!((pcs[0].b - b.powi(-2)).abs() < 1e-15 && (pcs[1].a - 1.0 / b).abs() < 1e-15);
        assert!(pcs.iter().all(|x| (x.freq - PI * b).abs() < 1e-14));
        // support [0, β⁻²) ∪ [β⁻¹, 1)
        let expected = 1.0 - (1.0 / b - b.powi(-2));
        assert!((p.inner_product(&p).unwrap().re - expected).abs() < 1e-14);
        assert!((expected - 0.763_932_022_5).abs() < 1e-10);
        assert!((p.sup_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn psi0_two_frequencies() {
        let c = ctx(2, 3);
        let p = psi0(&c);
        let b = c.beta_f64();
        assert!((b - (3.0 + 21f64.sqrt()) / 2.0).abs() < 1e-14);
        let pcs = p.pieces();
        // pieces j/β..x_j and x_j..(j+1)/β for j < q, then q/β..1
        assert_eq!(pcs.len(), 2 * 3 + 1);
        for (i, pc) in pcs.iter().enumerate() {
            let w = if i % 2 == 0 { 2.0 * PI * b / 4.0 } else { 2.0 * PI * b / 3.0 };
            assert!((pc.freq - w).abs() < 1e-13);
        }
        assert!((pcs[0].b - 3.0 / (b * b)).abs() < 1e-15);
    }

    #[test]
    fn psi0_is_annihilated() {
        for (n, q) in [(2, 1), (3, 1), (2, 2), (2, 3), (4, 2)] {
            let c = ctx(n, q);
            let r = psi0(&c).transfer().norm2();
            assert!(r <= 1e-12, "({n},{q}): {r}");
        }
    }

    #[test]
    fn psi0_approaches_full_circle() {
        let mut last = f64::INFINITY;
        for n in [4, 8, 12] {
            let c = ctx(n, 1);
            let e = PiecewiseExp::single(&c, AlgNum::zero(&c), AlgNum::one(&c), Complex64::new(1.0, 0.0), 2.0 * PI)
                .unwrap();
            let d = psi0(&c).sub(&e).unwrap().norm2();
            assert!(d < last);
            last = d;
        }
        assert!(last < 0.05);
    }

    #[test]
    fn constant_matches_pcfun() {
        let c = ctx(3, 2);
        let one = PiecewiseExp::from_pc(&ExactPc::one(&c));
        let got = one.transfer();
        let want = PiecewiseExp::from_pc(&ExactPc::one(&c).transfer());
        assert!(got.sub(&want).unwrap().norm2() < 1e-15);
        assert_eq!(got.breakpoints().len(), want.breakpoints().len());
        assert!(one.koopman().sub(&one).unwrap().norm2() < 1e-15);
    }

    #[test]
    fn transfer_scales_frequency() {
        let c = ctx(2, 2);
        let w = 7.5;
        let a = AlgNum::from_rational(&c, BigRational::new(1.into(), 5.into()));
        let b = AlgNum::from_rational(&c, BigRational::new(4.into(), 5.into()));
        let p = PiecewiseExp::single(&c, a, b, Complex64::new(0.3, -1.0), w).unwrap();
        let beta = c.beta_f64();
        assert!(p.transfer().frequencies().iter().all(|f| (f - w / beta).abs() < 1e-13));
        assert!(p.koopman().frequencies().iter().all(|f| (f - w * beta).abs() < 1e-12));
    }

    #[test]
    fn orthogonality_closed_form() {
        let c = ctx(2, 1);
        let (z, o) = (AlgNum::zero(&c), AlgNum::one(&c));
        let e1 = PiecewiseExp::single(&c, z.clone(), o.clone(), Complex64::new(1.0, 0.0), 2.0 * PI).unwrap();
        let e2 = PiecewiseExp::single(&c, z, o, Complex64::new(1.0, 0.0), 4.0 * PI).unwrap();
        assert!(e1.inner_product(&e2).unwrap().norm() < 1e-15);
        let p = psi0(&c);
        let a = p.inner_product(&e1).unwrap();
        let b = e1.inner_product(&p).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
    }

    #[test]
    fn eigenfunction_golden() {
        let c = ctx(2, 1);
        for z in [Complex64::new(0.5, 0.0), Complex64::new(0.3, 0.4), Complex64::new(-0.6, 0.0)] {
            let r = eigenfunction(&c, z, 12, DEFAULT_PIECE_CAP).unwrap();
            let res = r.residual_l2.unwrap();
            assert!((res - r.residual_bound).abs() <= 1e-9, "{res} vs {}", r.residual_bound);
            assert!(r.isometry_defects.iter().all(|&d| d <= 1e-10));
        }
        let (p, bound) = psi_z(&c, Complex64::new(0.0, 0.0), 5, DEFAULT_PIECE_CAP).unwrap();
        assert_eq!(bound, 0.0);
        assert!(p.sub(&psi0(&c)).unwrap().norm2() < 1e-15);
        assert!(matches!(eigenfunction(&c, Complex64::new(1.0, 0.0), 3, 100), Err(Error::Domain(_))));
        assert!(matches!(eigenfunction(&c, Complex64::new(0.5, 0.0), 12, 100), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn grid_mode_agrees() {
        let c = ctx(2, 1);
        let z = Complex64::new(0.5, 0.0);
        let exact = eigenfunction(&c, z, 8, DEFAULT_PIECE_CAP).unwrap();
        let grid = eigenfunction_grid(&c, z, 8, 1 << 14).unwrap();
        assert!((exact.residual_bound - grid.residual_bound).abs() < 1e-3 * exact.residual_bound.max(1e-12));
        let psi = exact.psi.unwrap();
        let mut worst = 0.0f64;
        for &(t, v) in grid.grid.as_ref().unwrap() {
            worst = worst.max((psi.eval(t) - v).norm());
        }
        // points landing within float error of a breakpoint can disagree
        let bad = grid.grid.unwrap().iter().filter(|(t, v)| (psi.eval(*t) - v).norm() > 1e-8).count();
        assert!(bad < 20, "{bad} mismatches, worst {worst}");
    }

    fn random_pexp(c: &BetaContext, cuts: &[u32], amps: &[(f64, f64, f64)]) -> PiecewiseExp {
        let mut pts: Vec<u32> = cuts.to_vec();
        pts.sort();
        pts.dedup();
        let mut acc = PiecewiseExp::zero(c);
        let mut prev = AlgNum::zero(c);
        for (i, &p) in pts.iter().chain(std::iter::once(&1000)).enumerate() {
            let right = AlgNum::from_rational(c, BigRational::new(p.into(), 1000.into()));
            if right > prev {
                let (re, im, w) = amps[i % amps.len()];
                let piece = PiecewiseExp::single(c, prev.clone(), right.clone(), Complex64::new(re, im), w).unwrap();
                acc = acc.add(&piece).unwrap();
            }
            prev = right;
        }
        acc
    }

    fn random_pc(c: &BetaContext, cuts: &[u32], vals: &[i32]) -> ExactPc {
        let mut pts: Vec<u32> = cuts.to_vec();
        pts.sort();
        pts.dedup();
        pts.retain(|&p| p > 0 && p < 1000);
        let mut breaks = vec![AlgNum::zero(c)];
        breaks.extend(pts.iter().map(|&p| AlgNum::from_rational(c, BigRational::new(p.into(), 1000.into()))));
        breaks.push(AlgNum::one(c));
        let values = (0..breaks.len() - 1).map(|i| AlgNum::from_int(c, vals[i % vals.len()] as i64)).collect();
        ExactPc::exact(c, breaks, values).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn duality_and_inverse_identity(
            cuts in prop::collection::vec(1u32..1000, 1..5),
            amps in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -20.0f64..20.0), 1..4),
            gcuts in prop::collection::vec(1u32..1000, 0..4),
            gvals in prop::collection::vec(-3i32..4, 1..4),
            q in 1u32..3,
        ) {
            let c = ctx(2, q);
            let psi = random_pexp(&c, &cuts, &amps);
            let g = PiecewiseExp::from_pc(&random_pc(&c, &gcuts, &gvals));
            let lhs = psi.transfer().inner_product(&g).unwrap();
            let rhs = psi.inner_product(&g.koopman()).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-10);

            let u1 = invariant_density(&c).unwrap().u1;
            let w = apply_w(&psi, &u1).unwrap();
            prop_assert!((w.norm2() - psi.norm2()).abs() <= 1e-10);
            let back = w
                .mul_pc_with(&u1, |v| v.to_f64().sqrt())
                .unwrap()
                .transfer()
                .mul_pc_with(&u1, |v| v.to_f64().sqrt().recip())
                .unwrap();
            prop_assert!(back.sub(&psi).unwrap().norm2() <= 1e-10);

            let orth = psi0(&c).inner_product(&g.koopman()).unwrap();
            prop_assert!(orth.norm() <= 1e-10);
        }
    }
}
