use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::context::{BetaContext, Enclosure};
use super::poly;
use crate::error::{Error, Result};

/// An element c₀ + c₁β + … + c_{n-1}β^{n-1} of Q(β), stored reduced modulo
/// P_{n,q}.
#[derive(Clone)]
pub struct AlgNum {
    ctx: BetaContext,
    coeffs: Vec<BigRational>,
    // (value, absolute error bound) of the double-precision embedding
    approx: OnceLock<(f64, f64)>,
}

impl fmt::Debug for AlgNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlgNum[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "] ≈ {}", self.approx().0)
    }
}

impl fmt::Display for AlgNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

fn reduce(ctx: &BetaContext, mut c: Vec<BigRational>) -> Vec<BigRational> {
    let n = ctx.n();
    if c.len() > n {
        let q = BigRational::from_integer(BigInt::from(ctx.q()));
        for k in (n..c.len()).rev() {
            if c[k].is_zero() {
                continue;
            }
            let t = &c[k] * &q;
            for slot in &mut c[k - n..k] {
                *slot += &t;
            }
        }
        c.truncate(n);
    }
    c.resize(n, BigRational::zero());
    c
}

impl AlgNum {
    /// Build from a coefficient vector of any length; reduces modulo P.
    pub fn from_coeffs(ctx: &BetaContext, coeffs: Vec<BigRational>) -> Self {
        AlgNum {
            ctx: ctx.clone(),
            coeffs: reduce(ctx, coeffs),
            approx: OnceLock::new(),
        }
    }

    pub fn zero(ctx: &BetaContext) -> Self {
        Self::from_coeffs(ctx, Vec::new())
    }

    pub fn one(ctx: &BetaContext) -> Self {
        Self::from_int(ctx, 1)
    }

    pub fn from_int(ctx: &BetaContext, k: i64) -> Self {
        Self::from_rational(ctx, BigRational::from_integer(BigInt::from(k)))
    }

    pub fn from_rational(ctx: &BetaContext, r: BigRational) -> Self {
        Self::from_coeffs(ctx, vec![r])
    }

    /// Exact dyadic value of a finite double.
    pub fn from_f64(ctx: &BetaContext, x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(|r| Self::from_rational(ctx, r))
            .ok_or_else(|| Error::Domain(format!("{x} is not finite")))
    }

    pub fn ctx(&self) -> &BetaContext {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Structural zero test; see [`AlgNum::is_zero`] for the value test.
    fn coeffs_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Size telemetry: the largest numerator+denominator bit length among
    /// the coefficients.
    pub fn bit_size(&self) -> u64 {
        self.coeffs.iter().map(poly::bit_size).max().unwrap_or(0)
    }

    fn check_ctx(&self, other: &AlgNum) {
        debug_assert!(self.ctx == other.ctx, "{}", Error::ContextMismatch);
    }

    /// Multiply by β (coefficient shift followed by one reduction).
    pub fn mul_beta(&self) -> Self {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(BigRational::zero());
        c.extend(self.coeffs.iter().cloned());
        Self::from_coeffs(&self.ctx, c)
    }

    /// Divide by β using 1/β = β^{n-1}/q - (β^{n-2} + … + 1).
    pub fn div_beta(&self) -> Self {
        let n = self.coeffs.len();
        let a0 = &self.coeffs[0];
        let mut c = Vec::with_capacity(n);
        for i in 0..n - 1 {
            c.push(&self.coeffs[i + 1] - a0);
        }
        c.push(a0 / BigRational::from_integer(BigInt::from(self.ctx.q())));
        AlgNum {
            ctx: self.ctx.clone(),
            coeffs: c,
            approx: OnceLock::new(),
        }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        AlgNum {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
            approx: OnceLock::new(),
        }
    }

    pub fn add_int(&self, k: i64) -> Self {
        let mut c = self.coeffs.clone();
        c[0] += BigRational::from_integer(BigInt::from(k));
        AlgNum {
            ctx: self.ctx.clone(),
            coeffs: c,
            approx: OnceLock::new(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = AlgNum::one(&self.ctx);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via extended Euclid against P_{n,q}.
    pub fn inv(&self) -> Result<Self> {
        if self.coeffs_zero() {
            return Err(Error::DivisionByZero);
        }
        let (g, s) = poly::ext_gcd(&self.coeffs, self.ctx.p_poly());
        if poly::degree(&g) != Some(0) {
            // Shares a factor with P. Either it vanishes at β, or it is a
            // zero divisor of the quotient ring; both are reported.
            return Err(Error::DivisionByZero);
        }
        Ok(Self::from_coeffs(&self.ctx, s))
    }

    pub fn checked_div(&self, other: &AlgNum) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    /// Whether the value at β is zero. A nonzero representative is zero at β
    /// exactly when gcd(representative, P) has a root in the β enclosure;
    /// this stays correct even if P were reducible.
    pub fn is_zero(&self) -> bool {
        if self.coeffs_zero() {
            return true;
        }
        let (g, _) = poly::ext_gcd(&self.coeffs, self.ctx.p_poly());
        if poly::degree(&g).unwrap_or(0) == 0 {
            return false;
        }
        let enc = self.ctx.enclosure_bits(128).expect("128 bits within cap");
        let a = poly::eval(&g, &enc.lo);
        let b = poly::eval(&g, &enc.hi);
        (a.is_negative() && b.is_positive()) || (a.is_positive() && b.is_negative())
    }

    /// Rigorous rational interval containing the value, for β in `enc`.
    pub fn eval_interval(&self, enc: &Enclosure) -> (BigRational, BigRational) {
        let mut lo_sum = BigRational::zero();
        let mut hi_sum = BigRational::zero();
        let mut plo = BigRational::one();
        let mut phi = BigRational::one();
        for c in &self.coeffs {
            if !c.is_zero() {
                let a = c * &plo;
                let b = c * &phi;
                if c.is_positive() {
                    lo_sum += a;
                    hi_sum += b;
                } else {
                    lo_sum += b;
                    hi_sum += a;
                }
            }
            plo *= &enc.lo;
            phi *= &enc.hi;
        }
        (lo_sum, hi_sum)
    }

    /// Double-precision value with a rigorous absolute error bound.
    pub fn approx(&self) -> (f64, f64) {
        *self.approx.get_or_init(|| {
            let pows = self.ctx.beta_pows_f64();
            let mut sum = 0.0f64;
            let mut mag = 0.0f64;
            for (c, p) in self.coeffs.iter().zip(pows) {
                if c.is_zero() {
                    continue;
                }
                let cf = match c.to_f64() {
                    Some(v) if v.is_finite() => v,
                    _ => return (f64::NAN, f64::INFINITY),
                };
                let t = cf * p;
                sum += t;
                mag += t.abs();
            }
            let n = self.coeffs.len() as f64;
            let err = 2.0 * (n + 4.0) * f64::EPSILON * mag + 1e-300;
            if !sum.is_finite() || !err.is_finite() {
                return (f64::NAN, f64::INFINITY);
            }
            (sum, err)
        })
    }

    fn start_bits(&self) -> u64 {
        64 + self.bit_size()
    }

    /// Sign of the value at β. Refines the β enclosure as needed.
    pub fn try_sign(&self) -> Result<Ordering> {
        if self.coeffs_zero() {
            return Ok(Ordering::Equal);
        }
        let (a, e) = self.approx();
        if a.abs() > e {
            return Ok(if a > 0.0 { Ordering::Greater } else { Ordering::Less });
        }
        let mut bits = self.start_bits();
        let mut zero_checked = false;
        loop {
            let enc = self.ctx.enclosure_bits(bits)?;
            let (lo, hi) = self.eval_interval(&enc);
            if lo.is_positive() {
                return Ok(Ordering::Greater);
            }
            if hi.is_negative() {
                return Ok(Ordering::Less);
            }
            if !zero_checked {
                if self.is_zero() {
                    return Ok(Ordering::Equal);
                }
                zero_checked = true;
            }
            bits *= 2;
        }
    }

    /// Sign of the value; panics only if the precision cap is exhausted.
    pub fn sign(&self) -> Ordering {
        self.try_sign().expect("sign undecided within the precision cap")
    }

    pub fn abs(&self) -> Self {
        if self.sign() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }

    /// Compare values at β.
    pub fn try_cmp(&self, other: &AlgNum) -> Result<Ordering> {
        self.check_ctx(other);
        let (a, ea) = self.approx();
        let (b, eb) = other.approx();
        if (a - b).abs() > ea + eb {
            return Ok(a.partial_cmp(&b).unwrap());
        }
        (self - other).try_sign()
    }

    /// Value equality; fast structural path first.
    pub fn value_eq(&self, other: &AlgNum) -> bool {
        if self.coeffs == other.coeffs {
            return true;
        }
        (self - other).is_zero()
    }

    /// Nearest double (within a couple of ulps).
    pub fn to_f64(&self) -> f64 {
        let (a, e) = self.approx();
        if e <= a.abs() * 1e-15 {
            return a;
        }
        let mut bits = self.start_bits();
        loop {
            let enc = match self.ctx.enclosure_bits(bits) {
                Ok(enc) => enc,
                Err(_) => return a,
            };
            let (lo, hi) = self.eval_interval(&enc);
            let mid = (&lo + &hi) / BigRational::from_integer(BigInt::from(2));
            let w = &hi - &lo;
            if w.is_zero() || w <= mid.abs() * poly::pow2(-60) || w <= poly::pow2(-1100) {
                return mid.to_f64().unwrap_or(f64::NAN);
            }
            bits *= 2;
        }
    }

    /// Rational approximation within 2^-bits of the value.
    pub fn to_rational(&self, bits: u64) -> Result<BigRational> {
        let mut prec = self.start_bits().max(bits + 8);
        loop {
            let enc = self.ctx.enclosure_bits(prec)?;
            let (lo, hi) = self.eval_interval(&enc);
            if &hi - &lo <= poly::pow2(-(bits as i64)) {
                return Ok((lo + hi) / BigRational::from_integer(BigInt::from(2)));
            }
            prec *= 2;
        }
    }

    /// Decimal rendering with `places` digits after the point.
    pub fn to_decimal(&self, places: usize) -> String {
        let bits = (places as f64 * std::f64::consts::LOG2_10) as u64 + 8;
        match self.to_rational(bits) {
            Ok(r) => poly::to_decimal(&r, places),
            Err(_) => format!("{:.17e}", self.to_f64()),
        }
    }

    /// ⌊value⌋, certified by exact sign tests.
    pub fn floor(&self) -> Result<BigInt> {
        let guess = self.to_f64();
        let mut j = if guess.is_finite() && guess.abs() < 1e15 {
            BigInt::from(guess.floor() as i64)
        } else {
            poly::floor_int(&self.to_rational(8)?)
        };
        loop {
            let jr = BigRational::from_integer(j.clone());
            let d0 = self - &AlgNum::from_rational(&self.ctx, jr.clone());
            if d0.try_sign()? == Ordering::Less {
                j -= 1;
                continue;
            }
            let d1 = self - &AlgNum::from_rational(&self.ctx, jr + BigRational::one());
            if d1.try_sign()? != Ordering::Less {
                j += 1;
                continue;
            }
            return Ok(j);
        }
    }

    /// Round every coefficient down to the dyadic grid 2^-bits. Used by the
    /// high-precision fallback when exact coefficients grow too large.
    pub fn round_to_bits(&self, bits: u64) -> Self {
        AlgNum {
            ctx: self.ctx.clone(),
            coeffs: self
                .coeffs
                .iter()
                .map(|c| poly::dyadic_floor(c, bits))
                .collect(),
            approx: OnceLock::new(),
        }
    }
}

impl PartialEq for AlgNum {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.value_eq(other)
    }
}

impl Eq for AlgNum {}

impl PartialOrd for AlgNum {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AlgNum {
    fn cmp(&self, other: &Self) -> Ordering {
        self.try_cmp(other)
            .expect("comparison undecided within the precision cap")
    }
}

impl<'a> Add<&'a AlgNum> for &'a AlgNum {
    type Output = AlgNum;
    fn add(self, rhs: &AlgNum) -> AlgNum {
        self.check_ctx(rhs);
        AlgNum {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
            approx: OnceLock::new(),
        }
    }
}

impl<'a> Sub<&'a AlgNum> for &'a AlgNum {
    type Output = AlgNum;
    fn sub(self, rhs: &AlgNum) -> AlgNum {
        self.check_ctx(rhs);
        AlgNum {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
            approx: OnceLock::new(),
        }
    }
}

impl<'a> Mul<&'a AlgNum> for &'a AlgNum {
    type Output = AlgNum;
    fn mul(self, rhs: &AlgNum) -> AlgNum {
        self.check_ctx(rhs);
        let n = self.coeffs.len();
        let mut prod = vec![BigRational::zero(); 2 * n - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        AlgNum::from_coeffs(&self.ctx, prod)
    }
}

impl Neg for &AlgNum {
    type Output = AlgNum;
    fn neg(self) -> AlgNum {
        AlgNum {
            ctx: self.ctx.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            approx: OnceLock::new(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<AlgNum> for AlgNum {
            type Output = AlgNum;
            fn $m(self, rhs: AlgNum) -> AlgNum {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a AlgNum> for AlgNum {
            type Output = AlgNum;
            fn $m(self, rhs: &AlgNum) -> AlgNum {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for AlgNum {
    type Output = AlgNum;
    fn neg(self) -> AlgNum {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn golden() -> BetaContext {
        BetaContext::new(2, 1, &poly::parse_rational("1e-15").unwrap()).unwrap()
    }

    fn int(k: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(k))
    }

    #[test]
    fn beta_squared_reduces() {
        let ctx = golden();
        let b = ctx.beta();
        let b2 = &b * &b;
        assert_eq!(b2.coeffs(), &[int(1), int(1)]);
    }

    #[test]
    fn inverse_of_beta_is_beta_minus_one() {
        let ctx = golden();
        let inv = ctx.inv_beta();
        assert_eq!(inv.coeffs(), &[int(-1), int(1)]);
        assert_eq!(&ctx.beta() * &inv, AlgNum::one(&ctx));
        let via_euclid = ctx.beta().inv().unwrap();
        assert_eq!(via_euclid.coeffs(), inv.coeffs());
        assert_eq!(ctx.beta().div_beta(), AlgNum::one(&ctx));
    }

    #[test]
    fn inverse_closed_form_all_contexts() {
        for n in 2..=6 {
            for q in 1..=4 {
                let ctx = BetaContext::with_default_tol(n, q).unwrap();
                let prod = &ctx.beta() * &ctx.inv_beta();
                assert!(prod.coeffs_zero() == false);
                assert_eq!(prod.coeffs()[0], int(1));
                assert!(prod.coeffs()[1..].iter().all(|c| c.is_zero()));
            }
        }
    }

    #[test]
    fn division_by_zero_reported() {
        let ctx = golden();
        assert_eq!(AlgNum::zero(&ctx).inv().unwrap_err(), Error::DivisionByZero);
        let z = &(&ctx.beta() * &ctx.beta()) - &ctx.beta().add_int(1);
        assert!(z.is_zero());
        assert!(AlgNum::one(&ctx).checked_div(&z).is_err());
    }

    #[test]
    fn sign_with_heavy_cancellation() {
        let ctx = golden();
        // F_{k+1} - F_k β = (-1)^k β^{-k}·(...) tends to zero rapidly
        let (mut a, mut b) = (BigInt::from(1), BigInt::from(1));
        for _ in 0..200 {
            let c = &a + &b;
            a = b;
            b = c;
        }
        let x = AlgNum::from_coeffs(&ctx, vec![BigRational::from_integer(b.clone()), -BigRational::from_integer(a.clone())]);
        // b - aβ with consecutive Fibonacci numbers: tiny but nonzero
        assert_ne!(x.sign(), Ordering::Equal);
        assert!(x.to_f64().abs() < 1e-40);
        assert_eq!(x.to_f64().signum(), if x.sign() == Ordering::Greater { 1.0 } else { -1.0 });
    }

    #[test]
    fn floor_near_integer() {
        let ctx = golden();
        // β · (1/β) = 1 exactly, floor 1; β/2 has floor 0
        assert_eq!((&ctx.beta() * &ctx.inv_beta()).floor().unwrap(), BigInt::from(1));
        let half = AlgNum::from_rational(&ctx, BigRational::new(1.into(), 2.into()));
        assert_eq!(half.mul_beta().floor().unwrap(), BigInt::from(0));
        assert_eq!(ctx.beta().pow(10).floor().unwrap(), BigInt::from(122));
    }

    #[test]
    fn decimal_output() {
        let ctx = golden();
        assert_eq!(ctx.beta().to_decimal(20), "1.61803398874989484820");
        assert_eq!(ctx.inv_beta().to_decimal(10), "0.6180339887");
    }

    fn arb_alg(ctx: BetaContext) -> impl Strategy<Value = AlgNum> {
        let n = ctx.n();
        prop::collection::vec((-50i64..50, 1i64..9), n)
            .prop_map(move |v| {
                AlgNum::from_coeffs(
                    &ctx,
                    v.into_iter().map(|(a, b)| BigRational::new(a.into(), b.into())).collect(),
                )
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_laws_hold_exactly(
            (a, b, c) in (arb_alg(BetaContext::with_default_tol(3, 2).unwrap()),
                          arb_alg(BetaContext::with_default_tol(3, 2).unwrap()),
                          arb_alg(BetaContext::with_default_tol(3, 2).unwrap()))
        ) {
            let (l, r) = (&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(l.coeffs(), r.coeffs());
            let (l, r) = (&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(l.coeffs(), r.coeffs());
            if !a.is_zero() {
                let prod = &a * &a.inv().unwrap();
                let one = AlgNum::one(a.ctx());
                prop_assert_eq!(prod.coeffs(), one.coeffs());
            }
        }

        #[test]
        fn float_embedding_inside_interval(a in arb_alg(BetaContext::with_default_tol(4, 1).unwrap())) {
            let enc = a.ctx().enclosure().clone();
            let (lo, hi) = a.eval_interval(&enc);
            let v = BigRational::from_float(a.to_f64()).unwrap();
            let slack = BigRational::from_float(1e-12).unwrap();
            prop_assert!(v >= &lo - &slack && v <= &hi + &slack);
            let (x, e) = a.approx();
            prop_assert!((x - a.to_f64()).abs() <= e + 1e-15);
        }
    }
}
