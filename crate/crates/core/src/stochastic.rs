//! Seeded sampling from piecewise-constant densities, the law of the scaled
//! remainder βX − ⌊βX⌋, exact correlation sequences and ergodic averages.
//!
//! Every random stream is a ChaCha8 generator keyed by the user seed, with
//! the stream number selecting a fixed-size chunk of the work. Results do
//! not depend on the thread count.

use std::cmp::Ordering;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algnum::{AlgNum, BetaContext};
use crate::error::{Error, Result};
use crate::expansion::{orbit, step_f64};
use crate::fmt::f64_sig17;
use crate::layers::invariant_density;
use crate::pcfun::{ExactModel, ExactPc, FloatPc};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
const CHUNK: usize = 1 << 16;

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleBatch {
    pub seed: u64,
    pub count: usize,
    pub draws: Vec<f64>,
}

/// Inverse-CDF sampler for a piecewise-constant density.
#[derive(Clone, Debug)]
pub struct PcSampler {
    breaks: Vec<f64>,
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl PcSampler {
    pub fn new(f: &FloatPc) -> Result<Self> {
        let breaks: Vec<f64> = f.breakpoints().to_vec();
        let values: Vec<f64> = f.values().to_vec();
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Domain("density takes negative values".into()));
        }
        let mut cum = vec![0.0];
        for (i, v) in values.iter().enumerate() {
            cum.push(cum[i] + v * (breaks[i + 1] - breaks[i]));
        }
        let total = *cum.last().unwrap();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("density integrates to {total}, not 1")));
        }
        Ok(PcSampler { breaks, values, cum })
    }

    pub fn from_exact(f: &ExactPc) -> Result<Self> {
        if !f.is_nonnegative() {
            return Err(Error::Domain("density takes negative values".into()));
        }
        Self::new(&f.to_float())
    }

    /// ∫₀ˣ f
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let i = self.breaks[1..].partition_point(|&b| b <= x).min(self.values.len() - 1);
        (self.cum[i] + self.values[i] * (x.min(1.0) - self.breaks[i])).min(1.0)
    }

    pub fn draw(&self, u: f64) -> f64 {
        let total = *self.cum.last().unwrap();
        let target = u * total;
        let i = self.cum[1..].partition_point(|&c| c <= target).min(self.values.len() - 1);
        let x = if self.values[i] > 0.0 {
            self.breaks[i] + (target - self.cum[i]) / self.values[i]
        } else {
            self.breaks[i]
        };
        x.clamp(0.0, f64::from_bits(1.0f64.to_bits() - 1))
    }
}

pub fn sample_density(f: &FloatPc, seed: u64, count: usize) -> Result<SampleBatch> {
    let s = PcSampler::new(f)?;
    Ok(SampleBatch { seed, count, draws: draws(&s, seed, count) })
}

fn draws(s: &PcSampler, seed: u64, count: usize) -> Vec<f64> {
    let chunks = count.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = chunk_rng(seed, c);
            let len = CHUNK.min(count - c * CHUNK);
            (0..len).map(move |_| s.draw(rng.random::<f64>())).collect::<Vec<_>>()
        })
        .collect()
}

/// Kolmogorov–Smirnov distance between the sample and the density's CDF.
pub fn ks_statistic(batch: &SampleBatch, s: &PcSampler) -> f64 {
    let mut xs = batch.draws.clone();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = s.cdf(x);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// 1% critical value of the KS statistic.
pub fn ks_critical(count: usize) -> f64 {
    1.63 / (count as f64).sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub observed: usize,
    pub expected: f64,
    /// (observed − expected)/standard error
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderReport {
    pub seed: u64,
    pub count: usize,
    pub bins: Vec<HistogramBin>,
    pub fraction_within_4se: f64,
    pub min_draw: f64,
    pub max_draw: f64,
    pub passes: bool,
}

impl RemainderReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lo,hi,observed,expected,z\n");
        for b in &self.bins {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                f64_sig17(b.lo),
                f64_sig17(b.hi),
                b.observed,
                f64_sig17(b.expected),
                f64_sig17(b.z)
            ));
        }
        out
    }
}

/// Histograms X̃ = βX − ⌊βX⌋ for X with density f and compares against 𝒫f.
pub fn remainder_pdf_check(
    ctx: &BetaContext,
    f: &ExactPc,
    seed: u64,
    count: usize,
    bins: usize,
) -> Result<RemainderReport> {
    if f.ctx() != ctx {
        return Err(Error::ContextMismatch);
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let s = PcSampler::from_exact(f)?;
    let target = PcSampler::from_exact(&f.transfer())?;
    let xs = draws(&s, seed, count);
    let rem: Vec<f64> = xs
        .par_iter()
        .map(|&x| step_f64(ctx, x).map(|(_, r)| r))
        .collect::<Result<_>>()?;
    let mut hist = vec![0usize; bins];
    for &r in &rem {
        hist[((r * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let n = count as f64;
    let mut out = Vec::with_capacity(bins);
    let mut ok = 0;
    for (i, &obs) in hist.iter().enumerate() {
        let (lo, hi) = (i as f64 / bins as f64, (i + 1) as f64 / bins as f64);
        let p = target.cdf(hi) - target.cdf(lo);
        let se = (n * p * (1.0 - p)).sqrt();
        let dev = obs as f64 - n * p;
        let z = if se > 0.0 { dev / se } else if dev == 0.0 { 0.0 } else { f64::INFINITY };
        if z.abs() <= 4.0 {
            ok += 1;
        }
        out.push(HistogramBin { lo, hi, observed: obs, expected: n * p, z });
    }
    let frac = ok as f64 / bins as f64;
    Ok(RemainderReport {
        seed,
        count,
        bins: out,
        fraction_within_4se: frac,
        min_draw: rem.iter().copied().fold(f64::INFINITY, f64::min),
        max_draw: rem.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        passes: frac >= 0.99,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LagRow {
    pub lag: usize,
    pub covariance: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationReport {
    pub g: String,
    /// ℳ = ∫u₁g
    pub mean: f64,
    pub method: &'static str,
    pub k1_fitted: f64,
    pub k2: f64,
    pub lags: Vec<LagRow>,
    /// Monte-Carlo only.
    pub samples: Option<usize>,
    pub standard_errors: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

impl CorrelationReport {
    pub fn within_envelope(&self) -> bool {
        self.lags.iter().all(|r| r.covariance.abs() <= r.bound * (1.0 + 1e-12))
    }

    /// |cov(ℓ+1)/cov(ℓ)| for consecutive lags.
    pub fn tail_ratios(&self) -> Vec<(usize, f64)> {
        self.lags
            .windows(2)
            .filter(|w| w[0].covariance != 0.0)
            .map(|w| (w[0].lag, (w[1].covariance / w[0].covariance).abs()))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,covariance,bound\n");
        for r in &self.lags {
            out.push_str(&format!("{},{},{}\n", r.lag, f64_sig17(r.covariance), f64_sig17(r.bound)));
        }
        out
    }
}

/// Exact covariances C(ℓ) = ∫𝒫^ℓ(u₁g₀)·g₀ with g₀ = g − ℳ.
pub fn correlation_exact(
    ctx: &BetaContext,
    g: &ExactPc,
    max_lag: usize,
    k2: f64,
    label: &str,
) -> Result<CorrelationReport> {
    if g.ctx() != ctx {
        return Err(Error::ContextMismatch);
    }
    if max_lag > 10_000 {
        return Err(Error::ResourceCap(format!("lag budget {max_lag} exceeds 10000")));
    }
    let u1 = invariant_density(ctx)?.u1;
    let mean = u1.inner_product(g);
    let g0 = g.sub(&ExactPc::constant(ExactModel::new(ctx), mean.clone()));
    let mut h = u1.mul(&g0);
    let mut covs = Vec::with_capacity(max_lag + 1);
    for l in 0..=max_lag {
        if l > 0 {
            h = h.transfer();
        }
        covs.push(h.inner_product(&g0).to_f64());
    }
    Ok(envelope_report(ctx, label, mean.to_f64(), "exact-quadrature", covs, k2))
}

fn envelope_report(
    ctx: &BetaContext,
    label: &str,
    mean: f64,
    method: &'static str,
    covs: Vec<f64>,
    k2: f64,
) -> CorrelationReport {
    let beta = ctx.beta_f64();
    let k1 = covs
        .iter()
        .enumerate()
        .map(|(l, c)| c.abs() * beta.powf(k2 * l as f64))
        .fold(0.0, f64::max);
    CorrelationReport {
        g: label.to_string(),
        mean,
        method,
        k1_fitted: k1,
        k2,
        lags: covs
            .into_iter()
            .enumerate()
            .map(|(lag, covariance)| LagRow { lag, covariance, bound: k1 * beta.powf(-k2 * lag as f64) })
            .collect(),
        samples: None,
        standard_errors: None,
        seed: None,
    }
}

/// 𝔼(𝒳_k𝒳_m) − ℳ² computed exactly through Koopman iterates; it depends
/// only on |k − m| and equals C(|k − m|).
pub fn joint_moment(ctx: &BetaContext, g: &ExactPc, k: usize, m: usize) -> Result<AlgNum> {
    if g.ctx() != ctx {
        return Err(Error::ContextMismatch);
    }
    let u1 = invariant_density(ctx)?.u1;
    let mean = u1.inner_product(g);
    let mut gk = g.clone();
    for _ in 0..k {
        gk = gk.koopman();
    }
    let mut gm = g.clone();
    for _ in 0..m {
        gm = gm.koopman();
    }
    Ok(&u1.mul(&gk).inner_product(&gm) - &(&mean * &mean))
}

/// Monte-Carlo covariance estimates with float orbits from u₁-distributed
/// starts; corroborative only.
pub fn correlation_monte_carlo(
    ctx: &BetaContext,
    g: &ExactPc,
    max_lag: usize,
    k2: f64,
    seed: u64,
    count: usize,
    label: &str,
) -> Result<CorrelationReport> {
    let u1 = invariant_density(ctx)?.u1;
    let mean = u1.inner_product(g).to_f64();
    let gf = g.to_float();
    let s = PcSampler::from_exact(&u1)?;
    let xs = draws(&s, seed, count);
    let beta = ctx.beta_f64();
    let prods: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x0| {
            let a = gf.eval_f64(x0) - mean;
            let mut x = x0;
            let mut row = Vec::with_capacity(max_lag + 1);
            for l in 0..=max_lag {
                if l > 0 {
                    x = (beta * x).fract();
                }
                row.push(a * (gf.eval_f64(x) - mean));
            }
            row
        })
        .collect();
    let n = count as f64;
    let mut covs = vec![0.0; max_lag + 1];
    let mut ses = vec![0.0; max_lag + 1];
    for l in 0..=max_lag {
        let m = prods.iter().map(|r| r[l]).sum::<f64>() / n;
        let v = prods.iter().map(|r| (r[l] - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        covs[l] = m;
        ses[l] = (v / n).sqrt();
    }
    let mut r = envelope_report(ctx, label, mean, "monte-carlo", covs, k2);
    r.samples = Some(count);
    r.standard_errors = Some(ses);
    r.seed = Some(seed);
    Ok(r)
}

/// Observables for ergodic averages.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Identity,
    Constant(f64),
    /// χ_{[a,b)}
    Indicator(AlgNum, AlgNum),
}

impl Observable {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Observable::Identity => x,
            Observable::Constant(c) => *c,
            Observable::Indicator(a, b) => {
                if x >= a.to_f64() && x < b.to_f64() {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval_exact(&self, x: &AlgNum) -> f64 {
        match self {
            Observable::Indicator(a, b) => {
                if x >= a && x < b {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.eval(x.to_f64()),
        }
    }

    /// ℳ = ∫u₁g, exact in ℚ(β) for the identity and indicators.
    pub fn mean(&self, ctx: &BetaContext) -> Result<f64> {
        let u1 = invariant_density(ctx)?.u1;
        Ok(match self {
            Observable::Identity => {
                let half = BigRational::new(1.into(), 2.into());
                u1.cells()
                    .fold(AlgNum::zero(ctx), |acc, (a, b, v)| {
                        &acc + &(v * &(&(b * b) - &(a * a))).scale(&half)
                    })
                    .to_f64()
            }
            Observable::Constant(c) => *c,
            Observable::Indicator(a, b) => {
                let chi = ExactPc::indicator(ExactModel::new(ctx), a.clone(), b.clone(), AlgNum::one(ctx))?;
                u1.inner_product(&chi).to_f64()
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            Observable::Identity => "x".into(),
            Observable::Constant(c) => format!("const:{c}"),
            Observable::Indicator(a, b) => format!("chi:[{},{})", f64_sig17(a.to_f64()), f64_sig17(b.to_f64())),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicRow {
    pub n: usize,
    pub mean_deviation: f64,
    pub variance: f64,
    pub variance_times_n: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErgodicReport {
    pub g: String,
    pub seed: u64,
    pub starts: usize,
    /// ℳ
    pub target: f64,
    pub rows: Vec<ErgodicRow>,
}

impl ErgodicReport {
    /// max/min of Var(A_N)·N across the rows.
    pub fn scaling_spread(&self) -> f64 {
        let v: Vec<f64> = self.rows.iter().map(|r| r.variance_times_n).collect();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,mean_deviation,variance,variance_times_N\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.n,
                f64_sig17(r.mean_deviation),
                f64_sig17(r.variance),
                f64_sig17(r.variance_times_n)
            ));
        }
        out
    }
}

/// A_N(x) = N⁻¹ Σ_{k<N} g(T^k x) over `starts` points drawn from u₁.
pub fn ergodic_average(
    ctx: &BetaContext,
    g: &Observable,
    seed: u64,
    starts: usize,
    horizons: &[usize],
) -> Result<ErgodicReport> {
    if starts < 2 {
        return Err(Error::InvalidParameter("need at least two starting points".into()));
    }
    let u1 = invariant_density(ctx)?.u1;
    let target = g.mean(ctx)?;
    let s = PcSampler::from_exact(&u1)?;
    let xs = draws(&s, seed, starts);
    let beta = ctx.beta_f64();
    let rows = horizons
        .iter()
        .map(|&n| {
            let devs: Vec<f64> = xs
                .par_iter()
                .map(|&x0| {
                    let mut x = x0;
                    let mut acc = 0.0;
                    for _ in 0..n {
                        acc += g.eval(x);
                        x = (beta * x).fract();
                    }
                    acc / n as f64 - target
                })
                .collect();
            let k = devs.len() as f64;
            let mean = devs.iter().sum::<f64>() / k;
            // second moment about ℳ, the quantity in the Chebyshev bound
            let variance = devs.iter().map(|d| d * d).sum::<f64>() / k;
            ErgodicRow { n, mean_deviation: mean, variance, variance_times_n: variance * n as f64 }
        })
        .collect();
    Ok(ErgodicReport { g: g.label(), seed, starts, target, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitAverage {
    pub start: String,
    pub period: Option<usize>,
    pub average: f64,
    pub target: f64,
    /// True when the orbit is eventually periodic, hence exceptional.
    pub exceptional: bool,
}

/// Exact orbit average of g along the orbit of x₀; detects periodicity.
pub fn orbit_average_exact(ctx: &BetaContext, g: &Observable, x0: &AlgNum, n: usize) -> Result<OrbitAverage> {
    let pts = orbit(x0, n)?;
    let period = (1..n).find(|&p| pts[p].value_eq(&pts[0]));
    let avg = pts[..n].iter().map(|x| g.eval_exact(x)).sum::<f64>() / n as f64;
    Ok(OrbitAverage {
        start: x0.to_decimal(20),
        period,
        average: avg,
        target: g.mean(ctx)?,
        exceptional: period.is_some(),
    })
}

/// Number of steps for which the double-precision orbit of x stays within
/// `tol` of the exact one.
pub fn shadowing_horizon(x: &AlgNum, max_steps: usize, tol: f64) -> Result<usize> {
    let ctx = x.ctx();
    let exact = orbit(x, max_steps + 1)?;
    let mut xf = x.to_f64();
    for (k, e) in exact.iter().enumerate() {
        if (xf - e.to_f64()).abs() > tol {
            return Ok(k);
        }
        xf = step_f64(ctx, xf)?.1;
    }
    Ok(max_steps)
}

/// Smallest cell-wise sign of an exact function; used to reject densities.
pub fn min_sign(f: &ExactPc) -> Ordering {
    f.values().iter().map(|v| v.sign()).min().unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::{spectral_data, red_point};

    fn golden() -> BetaContext {
        BetaContext::with_default_tol(2, 1).unwrap()
    }

    #[test]
    fn uniform_ks() {
        let ctx = golden();
        let chi = ExactPc::one(&ctx).to_float();
        let b = sample_density(&chi, DEFAULT_SEED, 20_000).unwrap();
        assert!(b.draws.iter().all(|&x| (0.0..1.0).contains(&x)));
        let s = PcSampler::new(&chi).unwrap();
        assert!(ks_statistic(&b, &s) <= ks_critical(20_000));
        let again = sample_density(&chi, DEFAULT_SEED, 20_000).unwrap();
        assert_eq!(b.draws, again.draws);
        assert!(sample_density(&chi, 1, 0).unwrap().draws.is_empty());
    }

    #[test]
    fn u1_mass_fraction() {
        let ctx = golden();
        let u1 = invariant_density(&ctx).unwrap().u1;
        let count = 200_000;
        let b = sample_density(&u1.to_float(), 7, count).unwrap();
        let p = 1.0 / ctx.beta_f64() * 1.170_820_393_249_937;
        assert!((p - 0.723_606_797_7).abs() < 1e-9);
        let frac = b.draws.iter().filter(|&&x| x < 1.0 / ctx.beta_f64()).count() as f64 / count as f64;
        let sigma = (p * (1.0 - p) / count as f64).sqrt();
        assert!((frac - p).abs() <= 3.0 * sigma);
    }

    #[test]
    fn rejects_bad_densities() {
        let ctx = golden();
        let half = ExactPc::constant(ExactModel::new(&ctx), AlgNum::from_rational(&ctx, BigRational::new(1.into(), 2.into())));
        assert!(matches!(PcSampler::from_exact(&half), Err(Error::Domain(_))));
        let neg = ExactPc::one(&ctx).scale(&AlgNum::from_int(&ctx, -1));
        assert!(matches!(PcSampler::from_exact(&neg), Err(Error::Domain(_))));
        assert_eq!(min_sign(&neg), Ordering::Less);
    }

    #[test]
    fn remainder_histograms() {
        let ctx = golden();
        let chi = ExactPc::one(&ctx);
        let r = remainder_pdf_check(&ctx, &chi, DEFAULT_SEED, 200_000, 50).unwrap();
        assert!(r.passes, "{}", r.fraction_within_4se);
        let u1 = invariant_density(&ctx).unwrap().u1;
        assert!(remainder_pdf_check(&ctx, &u1, 3, 200_000, 50).unwrap().passes);
        // density β·χ_{[0,1/β)} pushes forward onto all of [0,1)
        let f0 = crate::layers::red_basis(&ctx, 0).unwrap();
        let r = remainder_pdf_check(&ctx, &f0, 5, 100_000, 20).unwrap();
        assert!(r.passes && r.min_draw < 0.01 && r.max_draw > 0.99);
    }

    #[test]
    fn golden_correlations() {
        let ctx = golden();
        let k2 = spectral_data(&ctx, 1e-10).unwrap().k2;
        let one = ExactPc::one(&ctx);
        let r = correlation_exact(&ctx, &one, 5, k2, "1").unwrap();
        assert!(r.lags.iter().all(|l| l.covariance == 0.0));

        let g = ExactPc::indicator(ExactModel::new(&ctx), AlgNum::zero(&ctx), red_point(&ctx, 1).unwrap(), AlgNum::one(&ctx)).unwrap();
        let r = correlation_exact(&ctx, &g, 20, k2, "chi").unwrap();
        assert!(r.lags[0].covariance > 0.0);
        assert!(r.within_envelope());
        let lam = ctx.beta_f64().powi(-2);
        for (l, ratio) in r.tail_ratios() {
            if l >= 10 {
                assert!((ratio - lam).abs() <= 0.05 * lam);
            }
        }
        for (k, m) in [(0, 2), (2, 0), (1, 3), (3, 1)] {
            let c = joint_moment(&ctx, &g, k, m).unwrap();
            assert!((c.to_f64() - r.lags[2].covariance).abs() < 1e-14);
        }
        assert!(joint_moment(&ctx, &g, 1, 3).unwrap().value_eq(&joint_moment(&ctx, &g, 3, 1).unwrap()));

        let mc = correlation_monte_carlo(&ctx, &g, 3, k2, DEFAULT_SEED, 100_000, "chi").unwrap();
        for (l, se) in mc.standard_errors.as_ref().unwrap().iter().enumerate() {
            assert!((mc.lags[l].covariance - r.lags[l].covariance).abs() <= 5.0 * se);
        }
    }

    #[test]
    fn ergodic_identity() {
        let ctx = golden();
        let c = ergodic_average(&ctx, &Observable::Constant(0.25), 1, 10, &[100]).unwrap();
        assert_eq!(c.rows[0].variance, 0.0);
        // ℳ for g = x: Σ u_i (b² − a²)/2 over the two red cells
        let b = ctx.beta_f64();
        let (u0, u1) = (1.170_820_393_249_937, 0.723_606_797_749_979);
        let want = 0.5 * (u0 / (b * b) + u1 * (1.0 - 1.0 / (b * b)));
        assert!((Observable::Identity.mean(&ctx).unwrap() - want).abs() < 1e-12);
        let r = ergodic_average(&ctx, &Observable::Identity, DEFAULT_SEED, 300, &[100, 1000]).unwrap();
        assert!(r.rows.iter().all(|row| row.mean_deviation.abs() < 0.02));
    }

    #[test]
    fn half_has_period_three() {
        let ctx = golden();
        let half = AlgNum::from_rational(&ctx, BigRational::new(1.into(), 2.into()));
        let r = orbit_average_exact(&ctx, &Observable::Identity, &half, 300).unwrap();
        assert_eq!(r.period, Some(3));
        let pts = orbit(&half, 3).unwrap();
        let avg: f64 = pts[..3].iter().map(|x| x.to_f64()).sum::<f64>() / 3.0;
        assert!((r.average - avg).abs() < 1e-12);
        assert!((r.average - r.target).abs() > 0.01);
    }

    #[test]
    fn float_orbits_shadow_for_a_while() {
        let ctx = golden();
        let x = AlgNum::from_rational(&ctx, BigRational::new(3.into(), 7.into()));
        let h = shadowing_horizon(&x, 200, 1e-9).unwrap();
        // error grows like β^k·2^-53, crossing 1e-9 near k = 33
        assert!((25..60).contains(&h), "{h}");
    }
}
