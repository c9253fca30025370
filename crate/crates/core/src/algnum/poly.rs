//! Dense univariate polynomials over the rationals, coefficients in
//! ascending order of degree.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub(crate) type QPoly = Vec<BigRational>;

pub(crate) fn trim(p: &mut QPoly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

/// Degree of a trimmed polynomial; `None` for the zero polynomial.
pub(crate) fn degree(p: &[BigRational]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

pub(crate) fn eval(p: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

pub(crate) fn from_ints(p: &[i64]) -> QPoly {
    p.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect()
}

/// Polynomial long division: returns (quotient, remainder).
pub(crate) fn divrem(a: &[BigRational], b: &[BigRational]) -> (QPoly, QPoly) {
    let db = degree(b).expect("division by the zero polynomial");
    let mut rem: QPoly = a.to_vec();
    trim(&mut rem);
    let lead = b[db].clone();
    let mut quot = vec![BigRational::zero(); rem.len().saturating_sub(db).max(1)];
    while let Some(dr) = degree(&rem) {
        if dr < db {
            break;
        }
        let f = &rem[dr] / &lead;
        let shift = dr - db;
        for (i, c) in b.iter().enumerate().take(db + 1) {
            rem[i + shift] -= &f * c;
        }
        quot[shift] = f;
        rem.truncate(dr);
        trim(&mut rem);
    }
    trim(&mut quot);
    (quot, rem)
}

fn sub(a: &[BigRational], b: &[BigRational]) -> QPoly {
    let len = a.len().max(b.len());
    let mut out: QPoly = (0..len)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
            let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

pub(crate) fn mul(a: &[BigRational], b: &[BigRational]) -> QPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

fn make_monic(p: &mut QPoly) {
    if let Some(d) = degree(p) {
        let lead = p[d].clone();
        for c in p.iter_mut() {
            *c = &*c / &lead;
        }
    }
}

/// Extended Euclid: returns (g, s) with g monic and s·a ≡ g (mod m).
pub(crate) fn ext_gcd(a: &[BigRational], m: &[BigRational]) -> (QPoly, QPoly) {
    let mut r0: QPoly = m.to_vec();
    let mut r1: QPoly = a.to_vec();
    trim(&mut r0);
    trim(&mut r1);
    let mut s0: QPoly = Vec::new();
    let mut s1: QPoly = vec![BigRational::one()];
    while degree(&r1).is_some() {
        let (qt, r) = divrem(&r0, &r1);
        let s2 = sub(&s0, &mul(&qt, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s2);
    }
    // r0 = s0·a (mod m); normalise
    if let Some(d) = degree(&r0) {
        let lead = r0[d].clone();
        for c in s0.iter_mut() {
            *c = &*c / &lead;
        }
    }
    make_monic(&mut r0);
    (r0, s0)
}

/// Floor of a rational as a big integer.
pub(crate) fn floor_int(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

/// Round `x` down to the dyadic grid 2^-bits.
pub(crate) fn dyadic_floor(x: &BigRational, bits: u64) -> BigRational {
    let scale = BigInt::one() << bits;
    let num = floor_int(&(x * BigRational::from_integer(scale.clone())));
    BigRational::new(num, scale)
}

/// Bit length of a rational: numerator bits plus denominator bits.
pub(crate) fn bit_size(x: &BigRational) -> u64 {
    x.numer().bits() + x.denom().bits()
}

/// Exact two's power 2^e as a rational (e may be negative).
pub(crate) fn pow2(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::one() << (e as u64))
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << ((-e) as u64))
    }
}

/// Decimal rendering of a rational rounded to `places` digits after the point.
pub(crate) fn to_decimal(x: &BigRational, places: usize) -> String {
    let neg = x.is_negative();
    let ax = x.abs();
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = &ax * BigRational::from_integer(scale.clone());
    let rounded = (scaled + BigRational::new(BigInt::one(), BigInt::from(2)))
        .floor()
        .to_integer();
    let int_part = &rounded / &scale;
    let frac_part = &rounded % &scale;
    let mut s = String::new();
    if neg && !rounded.is_zero() {
        s.push('-');
    }
    s.push_str(&int_part.to_string());
    if places > 0 {
        let frac = frac_part.to_string();
        s.push('.');
        for _ in frac.len()..places {
            s.push('0');
        }
        s.push_str(&frac);
    }
    s
}

/// Parse `"a/b"`, an integer, or a finite decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (ip, fp) = body.split_once('.').unwrap_or((body, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{ip}{fp}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let e10 = exp - fp.len() as i64;
    let ten = BigInt::from(10);
    let mut r = if e10 >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, e10 as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-e10) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn divrem_reconstructs() {
        let a = from_ints(&[-1, 0, 0, 1]); // x^3 - 1
        let b = from_ints(&[-1, 1]); // x - 1
        let (qt, r) = divrem(&a, &b);
        assert_eq!(qt, from_ints(&[1, 1, 1]));
        assert!(r.is_empty());
    }

    #[test]
    fn inverse_mod_golden() {
        // x^2 - x - 1; inverse of x is x - 1
        let m = from_ints(&[-1, -1, 1]);
        let (g, s) = ext_gcd(&from_ints(&[0, 1]), &m);
        assert_eq!(g, from_ints(&[1]));
        assert_eq!(s, from_ints(&[-1, 1]));
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal(&q(1, 3), 5), "0.33333");
        assert_eq!(to_decimal(&q(-2, 3), 2), "-0.67");
        assert_eq!(to_decimal(&q(5, 1), 0), "5");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("1/2"), Some(q(1, 2)));
        assert_eq!(parse_rational("0.25"), Some(q(1, 4)));
        assert_eq!(parse_rational("-3"), Some(q(-3, 1)));
        assert_eq!(parse_rational("1e-2"), Some(q(1, 100)));
        assert_eq!(parse_rational("x"), None);
        assert_eq!(parse_rational("1/0"), None);
    }
}
