//! Layer points, the normalized indicator basis, the induced n×n transfer
//! matrix, the invariant density, the Lipschitz approximation scheme and the
//! decay harness.
//!
//! A first-layer point is `t_k^{(j)} = q(β⁻¹ + … + β⁻ᵏ) + jβ^{-(k+1)}` with
//! `0 ≤ k < n`, `0 ≤ j ≤ q`. Deeper points nest: the chain
//! `(k₁,…,k_m; j₁,…,j_m)` sits at `t_{k₁}^{(j₁)} + β^{-(k₁+1)} t_{k₂}^{(j₂)} + …`
//! and the interval it opens has width `β^{-w}` with `w = m + Σk`.

mod approx;
mod decay;
mod matrix;

pub use approx::{
    approx_partition, approximate_lipschitz, approximate_lipschitz_exact, Leaf,
    DEFAULT_LEAF_CAP,
};
pub use decay::{iterate_transfer, DecayOptions, DecayReport, DEFAULT_BIT_CAP};
pub use matrix::{
    invariant_density, spectral_data, transfer_matrix, InvariantDensity, SpectralData,
    TransferMatrix,
};

use std::fmt;

use num_rational::BigRational;
use serde::Serialize;

use crate::algnum::{AlgNum, BetaContext};
use crate::error::{Error, Result};
use crate::pcfun::{ExactModel, ExactPc};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LayerIndex {
    pub k: Vec<usize>,
    pub j: Vec<u32>,
}

impl LayerIndex {
    pub fn new(k: Vec<usize>, j: Vec<u32>) -> Result<Self> {
        if k.len() != j.len() || k.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "chain lengths {} and {} must be equal and positive",
                k.len(),
                j.len()
            )));
        }
        Ok(LayerIndex { k, j })
    }

    pub fn single(k: usize, j: u32) -> Self {
        LayerIndex { k: vec![k], j: vec![j] }
    }

    pub fn depth(&self) -> usize {
        self.k.len()
    }

    /// m + Σk; the interval opened by this index has width β^{-weight}.
    pub fn weight(&self) -> usize {
        self.k.len() + self.k.iter().sum::<usize>()
    }

    pub fn child(&self, k: usize, j: u32) -> Self {
        let mut c = self.clone();
        c.k.push(k);
        c.j.push(j);
        c
    }

    /// Range check. Points allow j = q; basis functions need j < q.
    pub fn check(&self, ctx: &BetaContext, for_basis: bool) -> Result<()> {
        let (n, q) = (ctx.n(), ctx.q());
        for (&k, &j) in self.k.iter().zip(&self.j) {
            let j_max = if for_basis { q - 1 } else { q };
            if k >= n || j > j_max {
                return Err(Error::InvalidParameter(format!(
                    "index {self} out of range for n = {n}, q = {q}"
                )));
            }
        }
        Ok(())
    }

    /// The index reached by one application of 𝒫, or None when the
    /// function becomes χ_{[0,1]}.
    pub fn transfer_successor(&self) -> Option<Self> {
        if self.k[0] >= 1 {
            let mut s = self.clone();
            s.k[0] -= 1;
            Some(s)
        } else if self.depth() > 1 {
            Some(LayerIndex { k: self.k[1..].to_vec(), j: self.j[1..].to_vec() })
        } else {
            None
        }
    }
}

impl fmt::Display for LayerIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<String> = self.k.iter().map(|v| v.to_string()).collect();
        let js: Vec<String> = self.j.iter().map(|v| v.to_string()).collect();
        write!(f, "k=({}) j=({})", ks.join(","), js.join(","))
    }
}

/// t_k^{(j)}
pub fn first_layer_point(ctx: &BetaContext, k: usize, j: u32) -> AlgNum {
    let q = BigRational::from_integer(ctx.q().into());
    let mut t = AlgNum::zero(ctx);
    for i in 1..=k {
        t = &t + &ctx.inv_beta_pow(i as u32).scale(&q);
    }
    let jr = BigRational::from_integer(j.into());
    &t + &ctx.inv_beta_pow(k as u32 + 1).scale(&jr)
}

/// Red point t_r, 0 ≤ r ≤ n (t_0 = 0, t_n = 1).
pub fn red_point(ctx: &BetaContext, r: usize) -> Result<AlgNum> {
    if r > ctx.n() {
        return Err(Error::InvalidParameter(format!("red point {r} > n")));
    }
    if r == ctx.n() {
        return Ok(AlgNum::one(ctx));
    }
    Ok(first_layer_point(ctx, r, 0))
}

pub fn layer_point(ctx: &BetaContext, idx: &LayerIndex) -> Result<AlgNum> {
    idx.check(ctx, false)?;
    let mut t = AlgNum::zero(ctx);
    let mut scale_pow = 0u32;
    for (&k, &j) in idx.k.iter().zip(&idx.j) {
        let p = first_layer_point(ctx, k, j);
        t = &t + &(&p * &ctx.inv_beta_pow(scale_pow));
        scale_pow += k as u32 + 1;
    }
    Ok(t)
}

/// β^w·χ on the interval opened by `idx` (unit integral).
pub fn basis_fn(ctx: &BetaContext, idx: &LayerIndex) -> Result<ExactPc> {
    idx.check(ctx, true)?;
    let a = layer_point(ctx, idx)?;
    let w = idx.weight() as u32;
    let b = &a + &ctx.inv_beta_pow(w);
    ExactPc::indicator(ExactModel::new(ctx), a, b, ctx.beta().pow(w))
}

/// F_r = q⁻¹β^{r+1}χ_{[t_r, t_{r+1}]}.
pub fn red_basis(ctx: &BetaContext, r: usize) -> Result<ExactPc> {
    if r >= ctx.n() {
        return Err(Error::InvalidParameter(format!("red basis index {r} ≥ n")));
    }
    let height = ctx
        .beta()
        .pow(r as u32 + 1)
        .scale(&BigRational::new(1.into(), ctx.q().into()));
    ExactPc::indicator(ExactModel::new(ctx), red_point(ctx, r)?, red_point(ctx, r + 1)?, height)
}

/// Coordinates of f in the basis F_0, …, F_{n-1}, or None when f is not
/// constant on every red interval.
pub fn red_span_coords(f: &ExactPc) -> Option<Vec<AlgNum>> {
    let ctx = f.ctx();
    let n = ctx.n();
    let mut coords = Vec::with_capacity(n);
    let mut combo = ExactPc::constant(ExactModel::new(ctx), AlgNum::zero(ctx));
    for r in 0..n {
        let left = red_point(ctx, r).ok()?;
        let v = f.eval(&left);
        // F_r has height q⁻¹β^{r+1}
        let c = (&v * &ctx.inv_beta_pow(r as u32 + 1)).scale(&BigRational::from_integer(ctx.q().into()));
        combo = combo.add(&red_basis(ctx, r).ok()?.scale(&c));
        coords.push(c);
    }
    f.equals(&combo).then_some(coords)
}

/// Per-step record of the basis action check.
#[derive(Clone, Debug, Serialize)]
pub struct BasisStep {
    pub from: String,
    pub to: String,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BasisActionReport {
    pub index: String,
    /// Every single application of 𝒫 drops or decrements the leading index
    /// exactly as predicted.
    pub steps: Vec<BasisStep>,
    /// m − 1 + k₁ + … + k_{m−1}
    pub landing_count: usize,
    /// After `landing_count` steps the function is the first-layer F_{k_m}^{(j_m)}.
    pub lands_in_first_layer: bool,
    /// After `landing_count` steps the function lies in span{F_0, …, F_{n−1}}.
    pub in_red_span_at_landing: bool,
    /// 𝒫^w F = χ_{[0,1]} with w the weight of the index.
    pub reaches_constant_at_weight: bool,
}

impl BasisActionReport {
    pub fn rules_hold(&self) -> bool {
        self.steps.iter().all(|s| s.holds)
            && self.lands_in_first_layer
            && self.reaches_constant_at_weight
    }

    pub fn all_hold(&self) -> bool {
        self.rules_hold() && self.in_red_span_at_landing
    }
}

/// Exact verification of the drop/decrement rules for the basis functions.
pub fn basis_action_check(ctx: &BetaContext, idx: &LayerIndex) -> Result<BasisActionReport> {
    idx.check(ctx, true)?;
    let one = ExactPc::one(ctx);
    let landing_count = idx.depth() - 1 + idx.k[..idx.depth() - 1].iter().sum::<usize>();
    let mut steps = Vec::new();
    let mut cur = idx.clone();
    let mut f = basis_fn(ctx, idx)?;
    let mut landing = None;
    for s in 0..idx.weight() {
        if s == landing_count {
            landing = Some(f.clone());
        }
        let next = f.transfer();
        let (to, expected) = match cur.transfer_successor() {
            Some(nx) => (nx.to_string(), basis_fn(ctx, &nx)?),
            None => ("chi".to_string(), one.clone()),
        };
        steps.push(BasisStep { from: cur.to_string(), to, holds: next.equals(&expected) });
        f = next;
        if let Some(nx) = cur.transfer_successor() {
            cur = nx;
        }
    }
    let landing = landing.expect("landing count below weight");
    let last = LayerIndex::single(idx.k[idx.depth() - 1], idx.j[idx.depth() - 1]);
    Ok(BasisActionReport {
        index: idx.to_string(),
        steps,
        landing_count,
        lands_in_first_layer: landing.equals(&basis_fn(ctx, &last)?),
        in_red_span_at_landing: red_span_coords(&landing).is_some(),
        reaches_constant_at_weight: f.equals(&one),
    })
}

/// All basis indices of depth 1..=max_depth.
pub fn all_indices(ctx: &BetaContext, max_depth: usize) -> Vec<LayerIndex> {
    let (n, q) = (ctx.n(), ctx.q());
    let mut out = Vec::new();
    let mut frontier: Vec<LayerIndex> = Vec::new();
    for k in 0..n {
        for j in 0..q {
            frontier.push(LayerIndex::single(k, j));
        }
    }
    for _ in 0..max_depth {
        out.extend(frontier.iter().cloned());
        let mut next = Vec::new();
        for idx in &frontier {
            for k in 0..n {
                for j in 0..q {
                    next.push(idx.child(k, j));
                }
            }
        }
        frontier = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> BetaContext {
        BetaContext::with_default_tol(2, 1).unwrap()
    }

    #[test]
    fn layer_point_fixtures() {
        let ctx = golden();
        let p = |k: Vec<usize>, j: Vec<u32>| layer_point(&ctx, &LayerIndex::new(k, j).unwrap()).unwrap();
        assert!(p(vec![0], vec![0]).is_zero());
        assert!(p(vec![0], vec![1]).value_eq(&ctx.inv_beta()));
        assert!(p(vec![1], vec![1]).value_eq(&AlgNum::one(&ctx)));
        assert!(p(vec![0, 1], vec![0, 0]).value_eq(&ctx.inv_beta_pow(2)));
        assert!(layer_point(&ctx, &LayerIndex::single(2, 0)).is_err());
        assert!(LayerIndex::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn consecutive_points_differ_by_width() {
        let ctx = BetaContext::with_default_tol(3, 2).unwrap();
        for idx in all_indices(&ctx, 2) {
            let a = layer_point(&ctx, &idx).unwrap();
            let mut next = idx.clone();
            *next.j.last_mut().unwrap() += 1;
            let b = layer_point(&ctx, &next).unwrap();
            assert!((&b - &a).value_eq(&ctx.inv_beta_pow(idx.weight() as u32)));
        }
    }

    #[test]
    fn red_basis_fixtures() {
        let ctx = golden();
        let f0 = red_basis(&ctx, 0).unwrap();
        assert!(f0.breakpoints()[1].value_eq(&ctx.inv_beta()));
        assert!(f0.values()[0].value_eq(&ctx.beta()));
        let f1 = red_basis(&ctx, 1).unwrap();
        assert!(f1.breakpoints()[1].value_eq(&ctx.inv_beta()));
        assert!(f1.values()[1].value_eq(&ctx.beta().pow(2)));
        for r in 0..2 {
            assert!(red_basis(&ctx, r).unwrap().integrate().value_eq(&AlgNum::one(&ctx)));
        }
        assert!(red_basis(&ctx, 2).is_err());
    }

    #[test]
    fn red_transfer_rules() {
        for (n, q) in [(2, 1), (3, 2), (4, 3)] {
            let ctx = BetaContext::with_default_tol(n, q).unwrap();
            assert!(red_basis(&ctx, 0).unwrap().transfer().equals(&ExactPc::one(&ctx)));
            for r in 1..n {
                let lhs = red_basis(&ctx, r).unwrap().transfer();
                assert!(lhs.equals(&red_basis(&ctx, r - 1).unwrap()));
            }
        }
    }

    #[test]
    fn basis_functions_have_unit_mass() {
        let ctx = BetaContext::with_default_tol(3, 2).unwrap();
        for idx in all_indices(&ctx, 2) {
            assert!(basis_fn(&ctx, &idx).unwrap().integrate().value_eq(&AlgNum::one(&ctx)));
        }
    }

    #[test]
    fn chain_one_one_golden() {
        let ctx = golden();
        let idx = LayerIndex::new(vec![1, 1], vec![0, 0]).unwrap();
        let rep = basis_action_check(&ctx, &idx).unwrap();
        assert!(rep.all_hold());
        assert_eq!(rep.landing_count, 2);
        let f3 = basis_fn(&ctx, &idx).unwrap().transfer_pow(3);
        let c = red_span_coords(&f3).unwrap();
        assert!(c.iter().all(|v| v.sign() != std::cmp::Ordering::Less));
        let total = c.iter().fold(AlgNum::zero(&ctx), |a, b| &a + b);
        assert!(total.value_eq(&AlgNum::one(&ctx)));
    }

    #[test]
    fn first_layer_functions_leave_red_span_for_q_at_least_two() {
        // A single F_k^{(j)} is not constant on [t_k, t_{k+1}] when q ≥ 2, so
        // the landing point sits in the first layer but outside the span of
        // F_0, …, F_{n−1}; one further k_m + 1 steps reach χ.
        let ctx = BetaContext::with_default_tol(2, 2).unwrap();
        let idx = LayerIndex::new(vec![0, 1], vec![1, 0]).unwrap();
        let rep = basis_action_check(&ctx, &idx).unwrap();
        assert!(rep.rules_hold());
        assert!(!rep.in_red_span_at_landing);
    }

    #[test]
    fn successor_rules() {
        let i = LayerIndex::new(vec![2, 0, 1], vec![0, 1, 0]).unwrap();
        let s = i.transfer_successor().unwrap();
        assert_eq!(s.k, vec![1, 0, 1]);
        let t = LayerIndex::new(vec![0, 1], vec![1, 0]).unwrap().transfer_successor().unwrap();
        assert_eq!((t.k, t.j), (vec![1], vec![0]));
        assert!(LayerIndex::single(0, 0).transfer_successor().is_none());
    }
}
