//! Greedy β-expansions, the admissibility restrictions on digit sequences,
//! and classification of non-greedy representations.

use std::cmp::Ordering;

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::algnum::{AlgNum, BetaContext};
use crate::error::{Error, Result};

/// Distance from an integer below which the float floor of βx is re-decided
/// exactly.
const FLOAT_FLOOR_GUARD: f64 = 1e-12;

fn check_unit_interval(x: &AlgNum) -> Result<()> {
    if x.try_sign()? == Ordering::Less || x.try_cmp(&AlgNum::one(x.ctx()))? != Ordering::Less {
        return Err(Error::Domain(format!("x = {x} is outside [0,1)")));
    }
    Ok(())
}

/// One greedy step: returns (⌊βx⌋, T(x)).
pub fn step(x: &AlgNum) -> Result<(u32, AlgNum)> {
    check_unit_interval(x)?;
    let y = x.mul_beta();
    let j = y.floor()?;
    let j = j.to_u32().filter(|&d| d <= x.ctx().q()).ok_or_else(|| {
        Error::Domain(format!("floor(βx) = {j} outside digit range"))
    })?;
    Ok((j, y.add_int(-(j as i64))))
}

/// T(x) = βx − ⌊βx⌋ in ℚ(β).
pub fn t_beta(x: &AlgNum) -> Result<AlgNum> {
    step(x).map(|(_, t)| t)
}

/// One greedy step in floating point. The digit is certified: when βx lies
/// within 1e-12 of an integer the floor is decided in exact arithmetic on the
/// dyadic value of `x`.
pub fn step_f64(ctx: &BetaContext, x: f64) -> Result<(u32, f64)> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} is outside [0,1)")));
    }
    let y = ctx.beta_f64() * x;
    let fl = y.floor();
    let j = if y - fl > FLOAT_FLOOR_GUARD && fl + 1.0 - y > FLOAT_FLOOR_GUARD {
        fl as u32
    } else {
        let exact = AlgNum::from_f64(ctx, x)?;
        step(&exact)?.0
    };
    let t = (y - j as f64).clamp(0.0, 1.0 - f64::EPSILON / 2.0);
    Ok((j, t))
}

pub fn t_beta_f64(ctx: &BetaContext, x: f64) -> Result<f64> {
    step_f64(ctx, x).map(|(_, t)| t)
}

/// A finite prefix of a digit expansion.
#[derive(Clone, Debug)]
pub struct DigitSeq {
    pub ctx: BetaContext,
    pub digits: Vec<u32>,
    /// T^k(x) after the listed digits, when computed exactly.
    pub remainder: Option<AlgNum>,
    /// Float value of the remainder (always present).
    pub remainder_f64: f64,
}

impl DigitSeq {
    pub fn to_csv(&self) -> String {
        format_digits(&self.digits)
    }

    /// Admissibility report. With an exact remainder the restriction-3
    /// window ambiguity is settled: the digits end in the quasi-greedy tail
    /// only if the remainder equals the value of its continuation.
    pub fn validate(&self) -> ValidityReport {
        let rep = validate_digits(&self.ctx, &self.digits);
        match (&rep, &self.remainder) {
            (ValidityReport::Suspect { index, length }, Some(r)) => {
                let offset = *length;
                let cont = quasi_tail_value_after(&self.ctx, offset);
                if r.value_eq(&cont) {
                    ValidityReport::Invalid { restriction: 3, index: *index }
                } else {
                    ValidityReport::Valid
                }
            }
            _ => rep,
        }
    }
}

/// Greedy digits of an exact x ∈ [0,1).
pub fn greedy_digits(x: &AlgNum, count: usize) -> Result<DigitSeq> {
    let mut r = x.clone();
    let mut digits = Vec::with_capacity(count);
    for _ in 0..count {
        let (d, t) = step(&r)?;
        digits.push(d);
        r = t;
    }
    Ok(DigitSeq {
        ctx: x.ctx().clone(),
        remainder_f64: r.to_f64(),
        remainder: Some(r),
        digits,
    })
}

/// Greedy digits of a float x ∈ [0,1).
pub fn greedy_digits_f64(ctx: &BetaContext, x: f64, count: usize) -> Result<DigitSeq> {
    let mut r = x;
    let mut digits = Vec::with_capacity(count);
    for _ in 0..count {
        let (d, t) = step_f64(ctx, r)?;
        digits.push(d);
        r = t;
    }
    Ok(DigitSeq {
        ctx: ctx.clone(),
        digits,
        remainder: None,
        remainder_f64: r,
    })
}

/// Σ_{j=1}^{k} d_j β^{-j}, exactly.
pub fn digits_value(ctx: &BetaContext, digits: &[u32]) -> AlgNum {
    digits
        .iter()
        .rev()
        .fold(AlgNum::zero(ctx), |acc, &d| acc.add_int(d as i64).div_beta())
}

/// (c_1, …, c_len) with c_j = q−1 when n | j and q otherwise.
pub fn quasi_tail(ctx: &BetaContext, len: usize) -> Vec<u32> {
    let (n, q) = (ctx.n(), ctx.q());
    (1..=len).map(|j| if j % n == 0 { q - 1 } else { q }).collect()
}

/// β^m Σ_{j>m} c_j β^{-j}: the value of the quasi-greedy tail after its first
/// m digits.
fn quasi_tail_value_after(ctx: &BetaContext, m: usize) -> AlgNum {
    let head = digits_value(ctx, &quasi_tail(ctx, m));
    let one = AlgNum::one(ctx);
    let mut v = &one - &head;
    for _ in 0..m {
        v = v.mul_beta();
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ValidityReport {
    Valid,
    /// `index` is the 1-based position of the first offending digit (for
    /// restriction 2, the start of the run of q's).
    Invalid { restriction: u8, index: usize },
    /// The window ends in a prefix of the quasi-greedy tail starting at
    /// `index` and running for `length` digits; restriction 3 cannot be
    /// decided from a finite window.
    Suspect { index: usize, length: usize },
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidityReport::Valid)
    }
}

/// Tail-match length above which a window is reported as suspect.
pub fn suspect_threshold(ctx: &BetaContext) -> usize {
    3 * ctx.n()
}

pub fn validate_digits(ctx: &BetaContext, digits: &[u32]) -> ValidityReport {
    let (n, q) = (ctx.n(), ctx.q());
    if let Some(i) = digits.iter().position(|&d| d > q) {
        return ValidityReport::Invalid { restriction: 1, index: i + 1 };
    }
    let mut run = 0;
    for (i, &d) in digits.iter().enumerate() {
        run = if d == q { run + 1 } else { 0 };
        if run == n {
            return ValidityReport::Invalid { restriction: 2, index: i + 2 - n };
        }
    }
    let (start, len) = longest_quasi_tail_suffix(n, q, digits);
    if len >= suspect_threshold(ctx) {
        return ValidityReport::Suspect { index: start, length: len };
    }
    ValidityReport::Valid
}

/// Longest suffix of `digits` equal to (c_1, …, c_m). Returns the 1-based
/// start position and m.
fn longest_quasi_tail_suffix(n: usize, q: u32, digits: &[u32]) -> (usize, usize) {
    let l = digits.len();
    let mut best = (l + 1, 0);
    for r in 0..n {
        // Tail anchored at k ≡ r (mod n): position i (1-based) expects
        // q−1 when (i − r) ≡ 0 (mod n).
        let expected = |i: usize| if (i + n - r) % n == 0 { q - 1 } else { q };
        let mut s = l + 1;
        while s > 1 && digits[s - 2] == expected(s - 1) {
            s -= 1;
        }
        // Smallest k ≥ s−1 with k ≡ r (mod n).
        let k0 = s - 1;
        let k = k0 + (r + n - k0 % n) % n;
        if k < l && l - k > best.1 {
            best = (k + 1, l - k);
        }
    }
    best
}

/// Formats digits as a comma-separated stream.
pub fn format_digits(digits: &[u32]) -> String {
    digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

pub fn parse_digits(s: &str) -> Result<Vec<u32>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidParameter(format!("bad digit {t:?}")))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    UnitValue,
    GreedyIdentical,
    NonGreedyWithQuasiTail,
}

#[derive(Clone, Debug)]
pub struct ClassificationResult {
    pub case: Case,
    pub switch_index: Option<usize>,
    pub greedy_form: Option<Vec<u32>>,
    /// Σ d_j β^{-j}.
    pub value: AlgNum,
}

#[derive(Serialize)]
struct ClassificationJson<'a> {
    case: Case,
    k: Option<usize>,
    greedy: Option<&'a [u32]>,
}

impl ClassificationResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ClassificationJson {
            case: self.case,
            k: self.switch_index,
            greedy: self.greedy_form.as_deref(),
        })
        .expect("serializable")
    }
}

/// Classifies the representation d = preamble, then `period` repeated
/// forever (empty period: finite expansion).
pub fn classify_representation(
    ctx: &BetaContext,
    preamble: &[u32],
    period: &[u32],
) -> Result<ClassificationResult> {
    let (n, q) = (ctx.n(), ctx.q());
    if preamble.iter().chain(period).any(|&d| d > q) {
        return Err(Error::InvalidParameter("digit exceeds q".into()));
    }
    if !period.is_empty() && period.iter().all(|&d| d == q) {
        return Err(Error::InvalidParameter(format!("{n} consecutive digits equal {q}")));
    }
    let reps = if period.is_empty() { 0 } else { n / period.len() + 2 };
    let mut unrolled = preamble.to_vec();
    for _ in 0..reps {
        unrolled.extend_from_slice(period);
    }
    let mut run = 0;
    for &d in &unrolled {
        run = if d == q { run + 1 } else { 0 };
        if run >= n {
            return Err(Error::InvalidParameter(format!("{n} consecutive digits equal {q}")));
        }
    }

    let l = preamble.len();
    let p = period.len();
    // s[k] = β^k Σ_{j>k} d_j β^{-j}
    let tail = if p == 0 {
        AlgNum::zero(ctx)
    } else {
        let block = digits_value(ctx, period);
        let one = AlgNum::one(ctx);
        let denom = &one - &ctx.inv_beta_pow(p as u32);
        block.checked_div(&denom)?
    };
    let mut s = vec![AlgNum::zero(ctx); l + p.max(1)];
    s[l] = tail;
    for k in (0..l).rev() {
        s[k] = s[k + 1].add_int(preamble[k] as i64).div_beta();
    }
    for k in l..l + p.saturating_sub(1) {
        s[k + 1] = s[k].mul_beta().add_int(-(period[k - l] as i64));
    }
    let digit = |j: usize| -> u32 {
        // 1-based
        if j <= l {
            preamble[j - 1]
        } else if p == 0 {
            0
        } else {
            period[(j - l - 1) % p]
        }
    };
    let one = AlgNum::one(ctx);
    let value = s[0].clone();
    if value.value_eq(&one) {
        return Ok(ClassificationResult {
            case: Case::UnitValue,
            switch_index: None,
            greedy_form: None,
            value,
        });
    }
    let switch = (1..s.len()).find(|&k| s[k].value_eq(&one));
    let result = match switch {
        Some(k) => {
            let mut g: Vec<u32> = (1..=k).map(digit).collect();
            g[k - 1] += 1;
            ClassificationResult {
                case: Case::NonGreedyWithQuasiTail,
                switch_index: Some(k),
                greedy_form: Some(g),
                value,
            }
        }
        None => ClassificationResult {
            case: Case::GreedyIdentical,
            switch_index: None,
            greedy_form: None,
            value,
        },
    };

    // Cross-check against the greedy algorithm.
    let horizon = l + 2 * p + n;
    let greedy = greedy_digits(&result.value, horizon)?;
    let expected: Vec<u32> = match &result.greedy_form {
        Some(g) => (0..horizon).map(|i| g.get(i).copied().unwrap_or(0)).collect(),
        None => (1..=horizon).map(digit).collect(),
    };
    if greedy.digits != expected {
        return Err(Error::Domain(format!(
            "classification disagrees with greedy digits {:?}",
            greedy.digits
        )));
    }
    Ok(result)
}

/// Exact orbit x, T(x), …, T^{count}(x).
pub fn orbit(x: &AlgNum, count: usize) -> Result<Vec<AlgNum>> {
    let mut out = Vec::with_capacity(count + 1);
    out.push(x.clone());
    for i in 0..count {
        let next = t_beta(&out[i])?;
        out.push(next);
    }
    Ok(out)
}

/// Float orbit x, T(x), …, T^{count}(x).
pub fn orbit_f64(ctx: &BetaContext, x: f64, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count + 1);
    out.push(x);
    for i in 0..count {
        out.push(t_beta_f64(ctx, out[i])?);
    }
    Ok(out)
}

/// Parses "a/b", integers, or decimal strings into an exact element of ℚ ⊂ ℚ(β).
pub fn parse_point(ctx: &BetaContext, s: &str) -> Result<AlgNum> {
    crate::algnum::parse_rational(s)
        .map(|r| AlgNum::from_rational(ctx, r))
        .ok_or_else(|| Error::InvalidParameter(format!("cannot parse {s:?} as a rational")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn golden() -> BetaContext {
        BetaContext::with_default_tol(2, 1).unwrap()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn t_beta_fixtures() {
        let ctx = golden();
        assert!(t_beta(&ctx.inv_beta()).unwrap().is_zero());
        assert!(t_beta(&AlgNum::zero(&ctx)).unwrap().is_zero());
        let half = AlgNum::from_rational(&ctx, rat(1, 2));
        let t = t_beta(&half).unwrap();
        assert_eq!(t.coeffs(), &[rat(0, 1), rat(1, 2)]);
        assert!((t.to_f64() - 0.809_016_994_374_947_4).abs() < 1e-15);
        assert!(t_beta(&AlgNum::one(&ctx)).is_err());
        assert!(t_beta_f64(&ctx, -0.1).is_err());
    }

    #[test]
    fn period_three_at_half() {
        let ctx = golden();
        let half = AlgNum::from_rational(&ctx, rat(1, 2));
        let seq = greedy_digits(&half, 9).unwrap();
        assert_eq!(seq.digits, vec![0, 1, 0, 0, 1, 0, 0, 1, 0]);
        let orbit = orbit(&half, 9).unwrap();
        for k in (0..=9).step_by(3) {
            assert_eq!(orbit[k].coeffs(), half.coeffs());
        }
    }

    #[test]
    fn inverse_beta_and_float_point() {
        let ctx = golden();
        assert_eq!(greedy_digits(&ctx.inv_beta(), 5).unwrap().digits, vec![1, 0, 0, 0, 0]);
        let s = greedy_digits_f64(&ctx, 0.9, 2).unwrap();
        assert_eq!(s.digits, vec![1, 0]);
        // The float step at an exact breakpoint is decided exactly.
        let (d, t) = step_f64(&ctx, 1.0 / ctx.beta_f64()).unwrap();
        assert!(d <= 1 && (0.0..1.0).contains(&t));
    }

    #[test]
    fn validation_fixtures() {
        let ctx = golden();
        assert_eq!(validate_digits(&ctx, &[0, 1, 0, 0, 1]), ValidityReport::Valid);
        assert_eq!(
            validate_digits(&ctx, &[1, 1, 0]),
            ValidityReport::Invalid { restriction: 2, index: 1 }
        );
        assert_eq!(
            validate_digits(&ctx, &[0, 2]),
            ValidityReport::Invalid { restriction: 1, index: 2 }
        );
        let c32 = BetaContext::with_default_tol(3, 2).unwrap();
        assert_eq!(
            validate_digits(&c32, &[2, 2, 2]),
            ValidityReport::Invalid { restriction: 2, index: 1 }
        );
        let mut d = vec![0, 0, 0];
        d.extend(quasi_tail(&ctx, 8));
        assert_eq!(validate_digits(&ctx, &d), ValidityReport::Suspect { index: 4, length: 8 });
    }

    #[test]
    fn suffix_alignment() {
        // (3,2): c = 2,2,1,2,2,1,…; a suffix starting mid-block must align
        // to its own block boundary.
        let ctx = BetaContext::with_default_tol(3, 2).unwrap();
        let mut d = vec![0, 1];
        d.extend(quasi_tail(&ctx, 10));
        let (start, len) = longest_quasi_tail_suffix(3, 2, &d);
        assert_eq!((start, len), (3, 10));
        let (start, len) = longest_quasi_tail_suffix(3, 2, &[0, 2, 1, 2, 2, 1]);
        assert_eq!((start, len), (4, 3));
    }

    #[test]
    fn quasi_tail_fixtures() {
        assert_eq!(quasi_tail(&golden(), 6), vec![1, 0, 1, 0, 1, 0]);
        let c32 = BetaContext::with_default_tol(3, 2).unwrap();
        assert_eq!(quasi_tail(&c32, 6), vec![2, 2, 1, 2, 2, 1]);
    }

    #[test]
    fn quasi_tail_sums_to_one() {
        for (n, q) in [(2, 1), (3, 2), (4, 3), (5, 1)] {
            let ctx = BetaContext::with_default_tol(n, q).unwrap();
            let period = quasi_tail(&ctx, n);
            let r = classify_representation(&ctx, &[], &period).unwrap();
            assert_eq!(r.case, Case::UnitValue);
            // Partial sums approach 1 from below.
            let mut prev = 0.0;
            for len in 1..30 {
                let v = digits_value(&ctx, &quasi_tail(&ctx, len));
                assert!(v < AlgNum::one(&ctx));
                assert!(v.to_f64() >= prev);
                prev = v.to_f64();
            }
            assert!((1.0 - prev) < 1e-6);
        }
    }

    #[test]
    fn classification_fixtures() {
        let ctx = golden();
        let r = classify_representation(&ctx, &[0], &[1, 0]).unwrap();
        assert_eq!(r.case, Case::NonGreedyWithQuasiTail);
        assert_eq!(r.switch_index, Some(1));
        assert_eq!(r.greedy_form.as_deref(), Some(&[1u32][..]));
        assert!(r.value.value_eq(&ctx.inv_beta()));
        assert_eq!(r.to_json(), r#"{"case":"NonGreedyWithQuasiTail","k":1,"greedy":[1]}"#);

        let r = classify_representation(&ctx, &[], &[0, 1, 0]).unwrap();
        assert_eq!(r.case, Case::GreedyIdentical);
        assert!(r.value.value_eq(&AlgNum::from_rational(&ctx, rat(1, 2))));

        assert!(classify_representation(&ctx, &[1, 1], &[]).is_err());
        assert!(classify_representation(&ctx, &[], &[1]).is_err());
    }

    #[test]
    fn switch_deeper_in_preamble() {
        // (3,2): x = 0.1 2 | 2,2,1 repeating. The tail after position 2 sums
        // to 1, so the greedy form is (0, 2).
        let ctx = BetaContext::with_default_tol(3, 2).unwrap();
        let r = classify_representation(&ctx, &[0, 1], &[2, 2, 1]).unwrap();
        assert_eq!(r.case, Case::NonGreedyWithQuasiTail);
        assert_eq!(r.switch_index, Some(2));
        assert_eq!(r.greedy_form, Some(vec![0, 2]));
    }

    #[test]
    fn digit_stream_round_trip() {
        let d = vec![0, 1, 0, 0, 1];
        assert_eq!(format_digits(&d), "0,1,0,0,1");
        assert_eq!(parse_digits("0, 1,0,0,1").unwrap(), d);
        assert!(parse_digits("0,x").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn float_reconstruction_and_restrictions(x in 0.0f64..1.0, nq in (2usize..6, 1u32..5)) {
            let ctx = BetaContext::with_default_tol(nq.0, nq.1).unwrap();
            let seq = greedy_digits_f64(&ctx, x, 40).unwrap();
            let b = ctx.beta_f64();
            let mut partial = 0.0;
            for (k, &d) in seq.digits.iter().enumerate() {
                partial += d as f64 * b.powi(-(k as i32 + 1));
                let bound = b.powi(-(k as i32 + 1)) + 1e-13;
                prop_assert!((x - partial) <= bound && (x - partial) >= -1e-13);
            }
            let invalid = matches!(validate_digits(&ctx, &seq.digits), ValidityReport::Invalid { .. });
            prop_assert!(!invalid);
            prop_assert!(seq.remainder_f64 < 1.0);
        }

        #[test]
        fn exact_prefix_identity_and_classification(a in 0i64..997, nq in (2usize..5, 1u32..4)) {
            let ctx = BetaContext::with_default_tol(nq.0, nq.1).unwrap();
            let x = AlgNum::from_rational(&ctx, rat(a, 997));
            let seq = greedy_digits(&x, 20).unwrap();
            // β^k (x − Σ_{j≤k} x_j β^{-j}) == T^k(x) using independent powers.
            let k = seq.digits.len();
            let mut sum = AlgNum::zero(&ctx);
            for (j, &d) in seq.digits.iter().enumerate() {
                sum = &sum + &ctx.inv_beta_pow(j as u32 + 1).scale(&rat(d as i64, 1));
            }
            let lhs = &ctx.beta().pow(k as u32) * &(&x - &sum);
            prop_assert!(lhs.value_eq(seq.remainder.as_ref().unwrap()));
            prop_assert!(seq.validate().is_valid());
            let c = classify_representation(&ctx, &seq.digits, &[]).unwrap();
            prop_assert_eq!(c.case, Case::GreedyIdentical);
        }

        #[test]
        fn greedy_is_lexicographically_monotone(x in 0.0f64..1.0, y in 0.0f64..1.0) {
            let ctx = BetaContext::with_default_tol(3, 1).unwrap();
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            let a = greedy_digits_f64(&ctx, lo, 30).unwrap().digits;
            let b = greedy_digits_f64(&ctx, hi, 30).unwrap().digits;
            prop_assert!(a <= b);
        }
    }
}
