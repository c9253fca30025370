use rayon::prelude::*;

use super::{first_layer_point, LayerIndex};
use crate::algnum::{AlgNum, BetaContext};
use crate::error::{Error, Result};
use crate::pcfun::{ExactPc, FloatPc};

pub const DEFAULT_LEAF_CAP: usize = 5_000_000;

/// A leaf interval `[left, left + β^{-weight})`.
#[derive(Clone, Debug)]
pub struct Leaf {
    pub index: LayerIndex,
    pub left: AlgNum,
    pub weight: usize,
}

impl Leaf {
    pub fn width(&self, ctx: &BetaContext) -> AlgNum {
        ctx.inv_beta_pow(self.weight as u32)
    }
}

fn refine(
    ctx: &BetaContext,
    offsets: &[(usize, u32, AlgNum)],
    idx: LayerIndex,
    left: AlgNum,
    m: usize,
    cap: usize,
    out: &mut Vec<Leaf>,
) -> Result<()> {
    let w = idx.weight();
    if w >= m {
        if out.len() >= cap {
            return Err(Error::ResourceCap(format!("more than {cap} partition leaves")));
        }
        out.push(Leaf { index: idx, left, weight: w });
        return Ok(());
    }
    let scale = ctx.inv_beta_pow(w as u32);
    for (k, j, t) in offsets {
        let child_left = &left + &(&scale * t);
        refine(ctx, offsets, idx.child(*k, *j), child_left, m, cap, out)?;
    }
    Ok(())
}

/// Leaves of the refinement that splits every interval of weight below `m`
/// into its first-layer children. Leaves come back sorted by left endpoint.
pub fn approx_partition(ctx: &BetaContext, m: usize, cap: usize) -> Result<Vec<Leaf>> {
    let n = ctx.n();
    if m < n + 1 {
        return Err(Error::InvalidParameter(format!("depth M = {m} must be at least n + 1 = {}", n + 1)));
    }
    // Expected leaf count grows like β^M; refuse early when it clearly exceeds the cap.
    let estimate = ctx.beta_f64().powi(m as i32) / (n as f64 + 1.0);
    if estimate > 4.0 * cap as f64 {
        return Err(Error::ResourceCap(format!(
            "about {estimate:.0} leaves expected at depth {m}, cap is {cap}"
        )));
    }
    let mut offsets = Vec::new();
    for k in 0..n {
        for j in 0..ctx.q() {
            offsets.push((k, j, first_layer_point(ctx, k, j)));
        }
    }
    let parts: Vec<Result<Vec<Leaf>>> = offsets
        .par_iter()
        .map(|(k, j, t)| {
            let mut out = Vec::new();
            refine(ctx, &offsets, LayerIndex::single(*k, *j), t.clone(), m, cap, &mut out)?;
            Ok(out)
        })
        .collect();
    let mut leaves = Vec::new();
    for p in parts {
        leaves.extend(p?);
        if leaves.len() > cap {
            return Err(Error::ResourceCap(format!("more than {cap} partition leaves")));
        }
    }
    Ok(leaves)
}

/// Left-endpoint interpolant of an exactly evaluable f.
pub fn approximate_lipschitz_exact(
    ctx: &BetaContext,
    f: impl Fn(&AlgNum) -> AlgNum + Sync,
    m: usize,
    cap: usize,
) -> Result<ExactPc> {
    let leaves = approx_partition(ctx, m, cap)?;
    let values: Vec<AlgNum> = leaves.par_iter().map(|l| f(&l.left)).collect();
    let mut breaks: Vec<AlgNum> = leaves.into_iter().map(|l| l.left).collect();
    breaks.push(AlgNum::one(ctx));
    ExactPc::exact(ctx, breaks, values)
}

/// Left-endpoint interpolant in double precision.
pub fn approximate_lipschitz(
    ctx: &BetaContext,
    f: impl Fn(f64) -> f64 + Sync,
    m: usize,
    cap: usize,
) -> Result<FloatPc> {
    let leaves = approx_partition(ctx, m, cap)?;
    let mut breaks: Vec<f64> = leaves.par_iter().map(|l| l.left.to_f64()).collect();
    let values: Vec<f64> = breaks.iter().map(|&x| f(x)).collect();
    breaks[0] = 0.0;
    breaks.push(1.0);
    FloatPc::from_f64_parts(ctx, breaks, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn golden() -> BetaContext {
        BetaContext::with_default_tol(2, 1).unwrap()
    }

    #[test]
    fn golden_depth_three() {
        let ctx = golden();
        let leaves = approx_partition(&ctx, 3, DEFAULT_LEAF_CAP).unwrap();
        let w: Vec<usize> = leaves.iter().map(|l| l.weight).collect();
        assert_eq!(w, vec![3, 4, 3, 3, 4]);
        let total = leaves.iter().fold(AlgNum::zero(&ctx), |a, l| &a + &l.width(&ctx));
        assert!(total.value_eq(&AlgNum::one(&ctx)));
    }

    #[test]
    fn leaves_tile_unit_interval() {
        for (n, q, m) in [(2, 1, 8), (2, 3, 5), (3, 2, 6), (4, 1, 7)] {
            let ctx = BetaContext::with_default_tol(n, q).unwrap();
            let leaves = approx_partition(&ctx, m, DEFAULT_LEAF_CAP).unwrap();
            assert!(leaves[0].left.is_zero());
            for w in leaves.windows(2) {
                let right = &w[0].left + &w[0].width(&ctx);
                assert!(right.value_eq(&w[1].left), "gap at {} ({n},{q})", w[1].index);
            }
            let last = leaves.last().unwrap();
            assert!((&last.left + &last.width(&ctx)).value_eq(&AlgNum::one(&ctx)));
            assert!(leaves.iter().all(|l| (m..m + n).contains(&l.weight)));
        }
    }

    #[test]
    fn depth_and_cap_errors() {
        let ctx = golden();
        assert!(matches!(approx_partition(&ctx, 2, 10), Err(Error::InvalidParameter(_))));
        assert!(matches!(approx_partition(&ctx, 12, 10), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn identity_interpolant_error() {
        let ctx = golden();
        let f = approximate_lipschitz_exact(&ctx, |x| x.clone(), 6, DEFAULT_LEAF_CAP).unwrap();
        let bound = ctx.inv_beta_pow(6);
        for (a, b, v) in f.cells() {
            // x − f(x) on [a, b) is at most b − a
            let err = b - v;
            assert!(err.try_cmp(&bound).unwrap() != std::cmp::Ordering::Greater);
            assert!(a.value_eq(v));
        }
        let c = approximate_lipschitz_exact(
            &ctx,
            |_| AlgNum::from_rational(&ctx, BigRational::new(2.into(), 7.into())),
            6,
            DEFAULT_LEAF_CAP,
        )
        .unwrap();
        assert_eq!(c.cell_count(), 1);
    }

    #[test]
    fn sine_grid_oracle() {
        let ctx = golden();
        let f = approximate_lipschitz(&ctx, f64::sin, 10, DEFAULT_LEAF_CAP).unwrap();
        let bound = ctx.beta_f64().powi(-10);
        let mut worst = 0.0f64;
        for i in 0..=100_000 {
            let x = i as f64 / 100_000.0;
            worst = worst.max((f.eval_f64(x) - x.sin()).abs());
        }
        assert!(worst <= bound, "{worst} > {bound}");
    }
}
