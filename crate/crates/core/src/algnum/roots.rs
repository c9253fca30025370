//! All complex roots of P_{n,q} and the Pisot certificate.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::context::BetaContext;
use super::poly;
use crate::error::{Error, Result};

const MAX_ITER: usize = 500;

/// A root estimate together with a radius guaranteed to contain a true root.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RootDisk {
    pub re: f64,
    pub im: f64,
    pub radius: f64,
}

impl RootDisk {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn modulus(&self) -> f64 {
        self.value().norm()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PisotReport {
    pub n: usize,
    pub q: u32,
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// The real root located inside the β enclosure.
    pub beta_root: RootDisk,
    /// The n - 1 remaining roots.
    pub other_roots: Vec<RootDisk>,
    /// (q/(q+2))^{1/n}
    pub annulus_lo: f64,
    pub all_inside_unit_disk: bool,
    pub outside_annulus: bool,
    pub multiplicities_simple: bool,
    /// Product of all root moduli (equals q).
    pub modulus_product: f64,
}

impl PisotReport {
    pub fn passes(&self) -> bool {
        self.all_inside_unit_disk && self.outside_annulus && self.multiplicities_simple
    }
}

fn horner(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::zero();
    let mut d = Complex64::zero();
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// Aberth–Ehrlich simultaneous iteration for a monic real polynomial
/// (ascending coefficients).
pub fn aberth(p: &[f64], eps: f64, max_iter: usize) -> Result<Vec<Complex64>> {
    let deg = p.len() - 1;
    let bound = 1.0 + p[..deg].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4;
            Complex64::from_polar(0.5 * bound, theta)
        })
        .collect();
    for _ in 0..max_iter {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let (v, d) = horner(p, z[i]);
            if v.norm() == 0.0 {
                continue;
            }
            let ratio = v / d;
            let repulse: Complex64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulse);
            z[i] -= w;
            max_step = max_step.max(w.norm() / z[i].norm().max(1.0));
        }
        if max_step < eps {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence(max_iter))
}

/// Newton polish followed by the inclusion radius deg·|p(z)/p'(z)|, which is
/// guaranteed to contain a root of p.
fn polish(p: &[f64], z: Complex64) -> RootDisk {
    let deg = (p.len() - 1) as f64;
    let mut z = z;
    for _ in 0..8 {
        let (v, d) = horner(p, z);
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        z -= step;
        if step.norm() <= 1e-17 * z.norm() {
            break;
        }
    }
    let (v, d) = horner(p, z);
    // Account for rounding in evaluating p itself.
    let mag: f64 = p.iter().enumerate().map(|(k, c)| c.abs() * z.norm().powi(k as i32)).sum();
    let vr = v.norm() + 4.0 * deg * f64::EPSILON * mag;
    RootDisk {
        re: z.re,
        im: z.im,
        radius: deg * vr / d.norm(),
    }
}

/// All n roots of P_{n,q}, from Q_{n,q}(z) = z^{n+1} - (q+1)z^n + q with the
/// root z = 1 deflated.
pub fn all_roots(ctx: &BetaContext, tol: f64) -> Result<PisotReport> {
    let n = ctx.n();
    let q = ctx.q() as i64;
    let mut qpoly = vec![0i64; n + 2];
    qpoly[0] = q;
    qpoly[n] = -(q + 1);
    qpoly[n + 1] = 1;
    let (deflated, rem) = poly::divrem(&poly::from_ints(&qpoly), &poly::from_ints(&[-1, 1]));
    debug_assert!(rem.iter().all(|c| c.is_zero()));
    debug_assert_eq!(deflated, poly::from_ints(ctx.p_coeffs()));
    let pf: Vec<f64> = deflated.iter().map(|c: &BigRational| c.to_f64().unwrap()).collect();

    let raw = aberth(&pf, 1e-15, MAX_ITER)?;
    let mut disks: Vec<RootDisk> = raw.into_iter().map(|z| polish(&pf, z)).collect();
    if let Some(bad) = disks.iter().find(|d| !(d.radius <= tol)) {
        return Err(Error::PrecisionExhausted(format!(
            "root near {:.6}+{:.6}i has radius {:.3e} > {tol:.3e}",
            bad.re, bad.im, bad.radius
        )));
    }

    let lo = ctx.beta_lo().to_f64().unwrap();
    let hi = ctx.beta_hi().to_f64().unwrap();
    let beta_idx = disks
        .iter()
        .enumerate()
        .filter(|(_, d)| d.re > 0.0)
        .min_by(|a, b| {
            let da = (a.1.value() - ctx.beta_f64()).norm();
            let db = (b.1.value() - ctx.beta_f64()).norm();
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .ok_or(Error::NoConvergence(MAX_ITER))?;
    let mut beta_root = disks.swap_remove(beta_idx);
    // The real root is certified by the rational enclosure.
    beta_root.im = 0.0;
    disks.sort_by(|a, b| {
        b.modulus()
            .partial_cmp(&a.modulus())
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });

    let annulus_lo = (ctx.q() as f64 / (ctx.q() as f64 + 2.0)).powf(1.0 / n as f64);
    let all_inside = disks.iter().all(|d| d.modulus() + d.radius < 1.0);
    let outside_annulus = disks.iter().all(|d| d.modulus() - d.radius > annulus_lo);
    let mut all: Vec<RootDisk> = disks.clone();
    all.push(beta_root);
    let mut simple = true;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if (all[i].value() - all[j].value()).norm() <= all[i].radius + all[j].radius {
                simple = false;
            }
        }
    }
    let modulus_product = all.iter().map(|d| d.modulus()).product();
    Ok(PisotReport {
        n,
        q: ctx.q(),
        beta_lo: lo,
        beta_hi: hi,
        beta_root,
        other_roots: disks,
        annulus_lo,
        all_inside_unit_disk: all_inside,
        outside_annulus,
        multiplicities_simple: simple,
        modulus_product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_conjugate() {
        let ctx = BetaContext::with_default_tol(2, 1).unwrap();
        let rep = all_roots(&ctx, 1e-12).unwrap();
        assert_eq!(rep.other_roots.len(), 1);
        let r = rep.other_roots[0];
        let expected = (1.0 - 5f64.sqrt()) / 2.0;
        assert!((r.re - expected).abs() < 1e-14 && r.im.abs() < 1e-14);
        assert!((r.modulus() - 0.618_033_988_7).abs() < 1e-10);
        assert!(r.modulus() > (1.0f64 / 3.0).sqrt());
        // Vieta: sum of roots is 1
        assert!((rep.beta_root.re + r.re - 1.0).abs() < 1e-14);
        assert!(rep.passes());
    }

    #[test]
    fn eight_five_inside_annulus() {
        let ctx = BetaContext::with_default_tol(8, 5).unwrap();
        let rep = all_roots(&ctx, 1e-12).unwrap();
        assert_eq!(rep.other_roots.len(), 7);
        let lo = (5.0f64 / 7.0).powf(1.0 / 8.0);
        assert!((rep.annulus_lo - lo).abs() < 1e-15);
        for r in &rep.other_roots {
            assert!(r.modulus() < 1.0 && r.modulus() > lo, "{r:?}");
            let p: Vec<f64> = ctx.p_coeffs().iter().map(|&c| c as f64).collect();
            let (v, d) = horner(&p, r.value());
            assert!(v.norm() <= 1e-12 * d.norm());
        }
        assert!(rep.passes());
        assert!((rep.modulus_product - 5.0).abs() < 1e-10);
    }

    #[test]
    fn aberth_on_known_cubic() {
        // (z-1)(z-2)(z+3) = z^3 - 7z + 6
        let roots = aberth(&[6.0, -7.0, 0.0, 1.0], 1e-15, 200).unwrap();
        let mut re: Vec<f64> = roots.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in re.iter().zip([-3.0, 1.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
