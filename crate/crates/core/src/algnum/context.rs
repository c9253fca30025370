use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::number::AlgNum;
use super::poly::{self, QPoly};
use crate::error::{Error, Result};

/// Upper bound on the precision (in bits) any enclosure refinement may reach.
pub const MAX_ENCLOSURE_BITS: u64 = 1 << 16;

/// A certified rational interval `[lo, hi]` containing β.
#[derive(Clone, Debug, PartialEq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Enclosure {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

struct Inner {
    n: usize,
    q: u32,
    p_coeffs: Vec<i64>,
    p_poly: QPoly,
    requested: Enclosure,
    beta_float: f64,
    beta_pows: Vec<f64>,
    inv_beta: Vec<BigRational>,
    // Monotonically refined; every stored interval is a certified sign change.
    fine: RwLock<Enclosure>,
}

/// The base β_{n,q}: the unique positive root of
/// `P(x) = x^n - q(x^{n-1} + ... + x + 1)`, held as a certified enclosure
/// together with the quotient-ring data needed for exact arithmetic in Q(β).
///
/// Cloning is cheap (shared handle).
#[derive(Clone)]
pub struct BetaContext(Arc<Inner>);

impl fmt::Debug for BetaContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BetaContext")
            .field("n", &self.0.n)
            .field("q", &self.0.q)
            .field("beta", &self.0.beta_float)
            .finish()
    }
}

impl PartialEq for BetaContext {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.n == other.0.n && self.0.q == other.0.q)
    }
}

/// JSON form of a context: `{"n", "q", "beta", "p_coeffs"}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ContextRecord {
    pub n: usize,
    pub q: u32,
    /// β rounded to 30 decimal places.
    pub beta: String,
    /// Coefficients of P_{n,q}, ascending degree.
    pub p_coeffs: Vec<i64>,
}

fn p_eval(p: &[BigRational], x: &BigRational) -> BigRational {
    poly::eval(p, x)
}

fn p_deriv_eval(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for (i, c) in p.iter().enumerate().skip(1).rev() {
        acc = acc * x + c * BigRational::from_integer(BigInt::from(i));
    }
    acc
}

/// Shrink a sign-change enclosure of the root of `p` until its width is at
/// most `target`. Bisection always; a Newton step is accepted only when its
/// candidate interval is itself certified by a sign change.
fn refine(p: &[BigRational], enc: &mut Enclosure, target: &BigRational) {
    let two = BigRational::from_integer(BigInt::from(2));
    while enc.width() > *target {
        let w = enc.width();
        let cur_bits = (-(w.to_f64().unwrap_or(1.0).log2())).max(1.0) as u64;
        let target_bits = (-(target.to_f64().unwrap_or(0.0).max(f64::MIN_POSITIVE).log2())).ceil() as u64;
        let want = (2 * cur_bits + 8).min(target_bits + 2).max(cur_bits + 1);
        let mid = (&enc.lo + &enc.hi) / &two;
        let d = p_deriv_eval(p, &mid);
        if !d.is_zero() {
            let x = &mid - p_eval(p, &mid) / d;
            let x = poly::dyadic_floor(&x, want);
            let delta = poly::pow2(-(want as i64));
            let a = &x - &delta;
            let b = &x + &delta;
            if a > enc.lo
                && b < enc.hi
                && p_eval(p, &a).is_negative()
                && p_eval(p, &b).is_positive()
            {
                enc.lo = a;
                enc.hi = b;
                continue;
            }
        }
        if p_eval(p, &mid).is_negative() {
            enc.lo = mid;
        } else {
            enc.hi = mid;
        }
    }
}

impl BetaContext {
    /// Build the context for (n, q) with an enclosure of width at most `tol`.
    pub fn new(n: usize, q: u32, tol: &BigRational) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
        }
        if q < 1 {
            return Err(Error::InvalidParameter("q must be >= 1".into()));
        }
        if !tol.is_positive() {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        let qi = q as i64;
        let mut p_coeffs = vec![-qi; n];
        p_coeffs.push(1);
        let p_poly = poly::from_ints(&p_coeffs);

        let q_big = BigRational::from_integer(BigInt::from(q));
        let mut enc = Enclosure {
            lo: q_big.clone(),
            hi: &q_big + BigRational::one(),
        };
        debug_assert!(p_eval(&p_poly, &enc.lo).is_negative());
        debug_assert!(p_eval(&p_poly, &enc.hi).is_positive());
        // Bisect until the tolerance is met and both ends are strictly inside (q, q+1).
        let two = BigRational::from_integer(BigInt::from(2));
        loop {
            if enc.width() <= *tol && enc.lo > q_big && enc.hi < &q_big + BigRational::one() {
                break;
            }
            let mid = (&enc.lo + &enc.hi) / &two;
            if p_eval(&p_poly, &mid).is_negative() {
                enc.lo = mid;
            } else {
                enc.hi = mid;
            }
        }
        let requested = enc.clone();

        let mut fine = enc;
        refine(&p_poly, &mut fine, &poly::pow2(-128));
        let beta_float = ((&fine.lo + &fine.hi) / &two).to_f64().unwrap();
        let mut beta_pows = Vec::with_capacity(n);
        let mut pw = BigRational::one();
        for _ in 0..n {
            beta_pows.push(pw.to_f64().unwrap());
            pw *= (&fine.lo + &fine.hi) / &two;
        }

        // 1/β = (β^{n-1} - q(β^{n-2} + ... + 1)) / q
        let mut inv_beta = vec![BigRational::from_integer(BigInt::from(-1)); n];
        inv_beta[n - 1] = BigRational::one() / &q_big;

        Ok(BetaContext(Arc::new(Inner {
            n,
            q,
            p_coeffs,
            p_poly,
            requested,
            beta_float,
            beta_pows,
            inv_beta,
            fine: RwLock::new(fine),
        })))
    }

    /// Context with a default enclosure width of 2^-100.
    pub fn with_default_tol(n: usize, q: u32) -> Result<Self> {
        Self::new(n, q, &poly::pow2(-100))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn q(&self) -> u32 {
        self.0.q
    }

    /// Coefficients of P_{n,q}, ascending degree.
    pub fn p_coeffs(&self) -> &[i64] {
        &self.0.p_coeffs
    }

    pub(crate) fn p_poly(&self) -> &[BigRational] {
        &self.0.p_poly
    }

    /// The enclosure produced at construction (width ≤ the requested tolerance).
    pub fn enclosure(&self) -> &Enclosure {
        &self.0.requested
    }

    pub fn beta_lo(&self) -> &BigRational {
        &self.0.requested.lo
    }

    pub fn beta_hi(&self) -> &BigRational {
        &self.0.requested.hi
    }

    /// Double-precision embedding of β.
    pub fn beta_f64(&self) -> f64 {
        self.0.beta_float
    }

    pub(crate) fn beta_pows_f64(&self) -> &[f64] {
        &self.0.beta_pows
    }

    /// β as an element of Q(β).
    pub fn beta(&self) -> AlgNum {
        let mut c = vec![BigRational::zero(); self.0.n];
        c[1] = BigRational::one();
        AlgNum::from_coeffs(self, c)
    }

    /// β⁻¹ by the closed form obtained from dividing P(β) = 0 by qβ.
    pub fn inv_beta(&self) -> AlgNum {
        AlgNum::from_coeffs(self, self.0.inv_beta.clone())
    }

    /// β^{-k} for k ≥ 0.
    pub fn inv_beta_pow(&self, k: u32) -> AlgNum {
        let mut x = AlgNum::one(self);
        for _ in 0..k {
            x = x.div_beta();
        }
        x
    }

    /// A certified enclosure of width at most 2^-bits, refining the shared
    /// cache when needed.
    pub fn enclosure_bits(&self, bits: u64) -> Result<Enclosure> {
        if bits > MAX_ENCLOSURE_BITS {
            return Err(Error::PrecisionExhausted(format!(
                "enclosure of {bits} bits requested (cap {MAX_ENCLOSURE_BITS})"
            )));
        }
        let target = poly::pow2(-(bits as i64));
        {
            let guard = self.0.fine.read().unwrap();
            if guard.width() <= target {
                return Ok(guard.clone());
            }
        }
        let mut guard = self.0.fine.write().unwrap();
        let mut enc = guard.clone();
        refine(&self.0.p_poly, &mut enc, &target);
        *guard = enc.clone();
        Ok(enc)
    }

    /// β rounded to `places` decimal digits.
    pub fn beta_decimal(&self, places: usize) -> String {
        let bits = (places as f64 * std::f64::consts::LOG2_10) as u64 + 16;
        let enc = self.enclosure_bits(bits).expect("decimal precision within cap");
        let mid = (&enc.lo + &enc.hi) / BigRational::from_integer(BigInt::from(2));
        poly::to_decimal(&mid, places)
    }

    /// Evaluate P_{n,q} at a rational point exactly.
    pub fn p_at(&self, x: &BigRational) -> BigRational {
        p_eval(&self.0.p_poly, x)
    }

    /// Evaluate P_{n,q} at a float in double precision.
    pub fn p_at_f64(&self, x: f64) -> f64 {
        self.0.p_coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
    }

    pub fn record(&self) -> ContextRecord {
        ContextRecord {
            n: self.0.n,
            q: self.0.q,
            beta: self.beta_decimal(30),
            p_coeffs: self.0.p_coeffs.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.record()).expect("context record serializes")
    }

    /// Rebuild a context from its JSON record, checking that the stored
    /// coefficients and β agree with (n, q).
    pub fn from_json(s: &str) -> Result<Self> {
        let rec: ContextRecord =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let ctx = Self::with_default_tol(rec.n, rec.q)?;
        if ctx.0.p_coeffs != rec.p_coeffs {
            return Err(Error::InvalidParameter("p_coeffs do not match (n, q)".into()));
        }
        let stored = poly::parse_rational(&rec.beta)
            .ok_or_else(|| Error::InvalidParameter("beta is not a decimal".into()))?;
        let enc = ctx.enclosure_bits(128)?;
        let slack = poly::parse_rational("1e-25").unwrap();
        if stored < &enc.lo - &slack || stored > &enc.hi + &slack {
            return Err(Error::InvalidParameter("beta does not match (n, q)".into()));
        }
        Ok(ctx)
    }
}

/// Convenience wrapper with the operation's name.
pub fn make_context(n: usize, q: u32, tol: &BigRational) -> Result<BetaContext> {
    BetaContext::new(n, q, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol(e: &str) -> BigRational {
        poly::parse_rational(e).unwrap()
    }

    #[test]
    fn golden_ratio_enclosure() {
        let ctx = BetaContext::new(2, 1, &tol("1e-15")).unwrap();
        assert!(ctx.beta_hi() - ctx.beta_lo() <= tol("1e-15"));
        assert!(ctx.p_at(ctx.beta_lo()).is_negative());
        assert!(ctx.p_at(ctx.beta_hi()).is_positive());
        assert!((ctx.beta_f64() - 1.618_033_988_749_895).abs() < 1e-15);
    }

    #[test]
    fn tribonacci_constant() {
        let ctx = BetaContext::new(3, 1, &tol("1e-12")).unwrap();
        assert!((ctx.beta_f64() - 1.839_286_755_214_161_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BetaContext::new(1, 1, &tol("1e-3")).is_err());
        assert!(BetaContext::new(2, 0, &tol("1e-3")).is_err());
        assert!(BetaContext::new(2, 1, &BigRational::zero()).is_err());
        assert!(BetaContext::new(2, 1, &tol("-1")).is_err());
    }

    #[test]
    fn refinement_reaches_requested_bits() {
        let ctx = BetaContext::new(4, 3, &tol("1e-6")).unwrap();
        let enc = ctx.enclosure_bits(600).unwrap();
        assert!(enc.width() <= poly::pow2(-600));
        assert!(ctx.p_at(&enc.lo).is_negative());
        assert!(ctx.p_at(&enc.hi).is_positive());
        assert!(ctx.enclosure_bits(MAX_ENCLOSURE_BITS + 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let ctx = BetaContext::new(2, 1, &tol("1e-15")).unwrap();
        let js = ctx.to_json();
        assert!(js.contains("\"beta\":\"1.618033988749894848204586834366\""));
        assert!(js.contains("\"p_coeffs\":[-1,-1,1]"));
        let back = BetaContext::from_json(&js).unwrap();
        assert_eq!(back, ctx);
        let bad = js.replace("1.6180", "1.7180");
        assert!(BetaContext::from_json(&bad).is_err());
    }
}
