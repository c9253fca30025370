//! Piecewise-constant functions on [0,1] and the exact action of the
//! transfer operator 𝒫 and the Koopman operator 𝔎 on them.
//!
//! Cells are half-open `[b_i, b_{i+1})`. The same code runs over two
//! models: exact (breakpoints and values in ℚ(β)) and float (f64
//! breakpoints, real or complex values).

use std::cmp::Ordering;
use std::fmt::Debug;
use std::marker::PhantomData;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;

use crate::algnum::{AlgNum, BetaContext};
use crate::error::{Error, Result};
use crate::fmt::f64_sig17;

/// Breakpoints closer than this are identified in float mode.
pub const FLOAT_POINT_TOL: f64 = 1e-12;

pub trait Model: Clone + Debug + Send + Sync {
    type P: Clone + Debug + Send + Sync;
    type V: Clone + Debug + Send + Sync;

    fn ctx(&self) -> &BetaContext;
    fn point(&self, k: i64) -> Self::P;
    fn cmp_points(&self, a: &Self::P, b: &Self::P) -> Ordering;
    /// βp − j
    fn expand(&self, p: &Self::P, j: u32) -> Self::P;
    /// (p + j)/β
    fn contract(&self, p: &Self::P, j: u32) -> Self::P;
    /// Clamp into [0,1] (float rounding only).
    fn clamp(&self, p: Self::P) -> Self::P {
        p
    }

    fn zero(&self) -> Self::V;
    fn from_i64(&self, k: i64) -> Self::V;
    fn add(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn sub(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn mul(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn div_beta(&self, a: &Self::V) -> Self::V;
    fn conj(&self, a: &Self::V) -> Self::V;
    fn abs(&self, a: &Self::V) -> Self::V;
    fn values_equal(&self, a: &Self::V, b: &Self::V) -> bool;
    fn is_zero(&self, a: &Self::V) -> bool {
        self.values_equal(a, &self.zero())
    }
    /// b − a as a value.
    fn width(&self, a: &Self::P, b: &Self::P) -> Self::V;

    fn point_f64(&self, p: &Self::P) -> f64;
    fn abs_f64(&self, v: &Self::V) -> f64;
    fn value_re_im(&self, v: &Self::V) -> (f64, f64);
    fn point_text(&self, p: &Self::P) -> String;
    fn value_text(&self, v: &Self::V) -> Vec<String>;
    fn value_columns(&self) -> &'static [&'static str];
    fn mode(&self) -> &'static str;
}

#[derive(Clone, Debug)]
pub struct ExactModel {
    ctx: BetaContext,
}

impl ExactModel {
    pub fn new(ctx: &BetaContext) -> Self {
        ExactModel { ctx: ctx.clone() }
    }
}

impl Model for ExactModel {
    type P = AlgNum;
    type V = AlgNum;

    fn ctx(&self) -> &BetaContext {
        &self.ctx
    }
    fn point(&self, k: i64) -> AlgNum {
        AlgNum::from_int(&self.ctx, k)
    }
    fn cmp_points(&self, a: &AlgNum, b: &AlgNum) -> Ordering {
        a.cmp(b)
    }
    fn expand(&self, p: &AlgNum, j: u32) -> AlgNum {
        p.mul_beta().add_int(-(j as i64))
    }
    fn contract(&self, p: &AlgNum, j: u32) -> AlgNum {
        p.add_int(j as i64).div_beta()
    }
    fn zero(&self) -> AlgNum {
        AlgNum::zero(&self.ctx)
    }
    fn from_i64(&self, k: i64) -> AlgNum {
        AlgNum::from_int(&self.ctx, k)
    }
    fn add(&self, a: &AlgNum, b: &AlgNum) -> AlgNum {
        a + b
    }
    fn sub(&self, a: &AlgNum, b: &AlgNum) -> AlgNum {
        a - b
    }
    fn mul(&self, a: &AlgNum, b: &AlgNum) -> AlgNum {
        a * b
    }
    fn div_beta(&self, a: &AlgNum) -> AlgNum {
        a.div_beta()
    }
    fn conj(&self, a: &AlgNum) -> AlgNum {
        a.clone()
    }
    fn abs(&self, a: &AlgNum) -> AlgNum {
        a.abs()
    }
    fn values_equal(&self, a: &AlgNum, b: &AlgNum) -> bool {
        a.coeffs() == b.coeffs()
    }
    fn width(&self, a: &AlgNum, b: &AlgNum) -> AlgNum {
        b - a
    }
    fn point_f64(&self, p: &AlgNum) -> f64 {
        p.to_f64()
    }
    fn abs_f64(&self, v: &AlgNum) -> f64 {
        v.to_f64().abs()
    }
    fn value_re_im(&self, v: &AlgNum) -> (f64, f64) {
        (v.to_f64(), 0.0)
    }
    fn point_text(&self, p: &AlgNum) -> String {
        p.to_decimal(30)
    }
    fn value_text(&self, v: &AlgNum) -> Vec<String> {
        vec![v.to_decimal(30)]
    }
    fn value_columns(&self) -> &'static [&'static str] {
        &["value"]
    }
    fn mode(&self) -> &'static str {
        "exact"
    }
}

/// Scalar types usable as float-mode values.
pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn from_f64(x: f64) -> Self;
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn re_im(self) -> (f64, f64);
    const COLUMNS: &'static [&'static str];
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn re_im(self) -> (f64, f64) {
        (self, 0.0)
    }
    const COLUMNS: &'static [&'static str] = &["value"];
}

impl Scalar for Complex64 {
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn re_im(self) -> (f64, f64) {
        (self.re, self.im)
    }
    const COLUMNS: &'static [&'static str] = &["re", "im"];
}

#[derive(Clone, Debug)]
pub struct FloatModel<S> {
    ctx: BetaContext,
    beta: f64,
    _s: PhantomData<S>,
}

impl<S> FloatModel<S> {
    pub fn new(ctx: &BetaContext) -> Self {
        FloatModel { ctx: ctx.clone(), beta: ctx.beta_f64(), _s: PhantomData }
    }
}

impl<S: Scalar> Model for FloatModel<S> {
    type P = f64;
    type V = S;

    fn ctx(&self) -> &BetaContext {
        &self.ctx
    }
    fn point(&self, k: i64) -> f64 {
        k as f64
    }
    fn cmp_points(&self, a: &f64, b: &f64) -> Ordering {
        if (a - b).abs() <= FLOAT_POINT_TOL {
            Ordering::Equal
        } else {
            a.partial_cmp(b).expect("finite breakpoints")
        }
    }
    fn expand(&self, p: &f64, j: u32) -> f64 {
        self.beta * p - j as f64
    }
    fn contract(&self, p: &f64, j: u32) -> f64 {
        (p + j as f64) / self.beta
    }
    fn clamp(&self, p: f64) -> f64 {
        p.clamp(0.0, 1.0)
    }
    fn zero(&self) -> S {
        S::from_f64(0.0)
    }
    fn from_i64(&self, k: i64) -> S {
        S::from_f64(k as f64)
    }
    fn add(&self, a: &S, b: &S) -> S {
        *a + *b
    }
    fn sub(&self, a: &S, b: &S) -> S {
        *a - *b
    }
    fn mul(&self, a: &S, b: &S) -> S {
        *a * *b
    }
    fn div_beta(&self, a: &S) -> S {
        *a * S::from_f64(1.0 / self.beta)
    }
    fn conj(&self, a: &S) -> S {
        a.conj()
    }
    fn abs(&self, a: &S) -> S {
        S::from_f64(a.modulus())
    }
    fn values_equal(&self, a: &S, b: &S) -> bool {
        a == b
    }
    fn width(&self, a: &f64, b: &f64) -> S {
        S::from_f64(b - a)
    }
    fn point_f64(&self, p: &f64) -> f64 {
        *p
    }
    fn abs_f64(&self, v: &S) -> f64 {
        v.modulus()
    }
    fn value_re_im(&self, v: &S) -> (f64, f64) {
        v.re_im()
    }
    fn point_text(&self, p: &f64) -> String {
        f64_sig17(*p)
    }
    fn value_text(&self, v: &S) -> Vec<String> {
        let (re, im) = v.re_im();
        if S::COLUMNS.len() == 1 {
            vec![f64_sig17(re)]
        } else {
            vec![f64_sig17(re), f64_sig17(im)]
        }
    }
    fn value_columns(&self) -> &'static [&'static str] {
        S::COLUMNS
    }
    fn mode(&self) -> &'static str {
        "float"
    }
}

#[derive(Clone, Debug)]
pub struct PiecewiseConstant<M: Model> {
    model: M,
    breaks: Vec<M::P>,
    values: Vec<M::V>,
}

pub type ExactPc = PiecewiseConstant<ExactModel>;
pub type FloatPc = PiecewiseConstant<FloatModel<f64>>;
pub type ComplexPc = PiecewiseConstant<FloatModel<Complex64>>;

impl<M: Model> PiecewiseConstant<M> {
    /// Builds and normalizes a function. Breakpoints must start at 0, end at
    /// 1, and be non-decreasing; zero-width cells are dropped.
    pub fn new(model: M, breaks: Vec<M::P>, values: Vec<M::V>) -> Result<Self> {
        if breaks.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints for {} values",
                breaks.len(),
                values.len()
            )));
        }
        let zero = model.point(0);
        let one = model.point(1);
        if model.cmp_points(&breaks[0], &zero) != Ordering::Equal
            || model.cmp_points(&breaks[breaks.len() - 1], &one) != Ordering::Equal
        {
            return Err(Error::InvalidParameter("breakpoints must span [0,1]".into()));
        }
        for w in breaks.windows(2) {
            if model.cmp_points(&w[0], &w[1]) == Ordering::Greater {
                return Err(Error::InvalidParameter("breakpoints not increasing".into()));
            }
        }
        Ok(Self::from_parts(model, breaks, values))
    }

    /// Normalizing constructor for internally generated, already ordered
    /// data.
    fn from_parts(model: M, breaks: Vec<M::P>, values: Vec<M::V>) -> Self {
        let last = values.len();
        let mut nb: Vec<M::P> = Vec::with_capacity(breaks.len());
        let mut nv: Vec<M::V> = Vec::with_capacity(values.len());
        nb.push(model.point(0));
        for (i, v) in values.into_iter().enumerate() {
            let right = if i + 1 == last { model.point(1) } else { breaks[i + 1].clone() };
            let empty = model.cmp_points(nb.last().unwrap(), &right) != Ordering::Less;
            if empty && i + 1 < last {
                continue;
            }
            if empty && !nv.is_empty() {
                *nb.last_mut().unwrap() = right;
                continue;
            }
            if let Some(prev) = nv.last() {
                if model.values_equal(prev, &v) {
                    *nb.last_mut().unwrap() = right;
                    continue;
                }
            }
            nb.push(right);
            nv.push(v);
        }
        PiecewiseConstant { model, breaks: nb, values: nv }
    }

    pub fn constant(model: M, v: M::V) -> Self {
        let b = vec![model.point(0), model.point(1)];
        PiecewiseConstant { model, breaks: b, values: vec![v] }
    }

    /// v·χ_{[a,b)} for 0 ≤ a < b ≤ 1.
    pub fn indicator(model: M, a: M::P, b: M::P, v: M::V) -> Result<Self> {
        let zero = model.point(0);
        let one = model.point(1);
        if model.cmp_points(&a, &zero) == Ordering::Less
            || model.cmp_points(&b, &one) == Ordering::Greater
            || model.cmp_points(&a, &b) != Ordering::Less
        {
            return Err(Error::InvalidParameter("indicator needs 0 ≤ a < b ≤ 1".into()));
        }
        let z = model.zero();
        let breaks = vec![zero, a, b, one];
        let values = vec![z.clone(), v, z];
        Ok(Self::from_parts(model, breaks, values))
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn ctx(&self) -> &BetaContext {
        self.model.ctx()
    }

    pub fn breakpoints(&self) -> &[M::P] {
        &self.breaks
    }

    pub fn values(&self) -> &[M::V] {
        &self.values
    }

    pub fn cell_count(&self) -> usize {
        self.values.len()
    }

    /// Iterator over (left, right, value).
    pub fn cells(&self) -> impl Iterator<Item = (&M::P, &M::P, &M::V)> {
        self.breaks.windows(2).zip(&self.values).map(|(w, v)| (&w[0], &w[1], v))
    }

    /// Value on the cell containing x (right-continuous; x = 1 reads the
    /// last cell).
    pub fn eval(&self, x: &M::P) -> M::V {
        let m = &self.model;
        let idx = self.breaks[1..]
            .partition_point(|b| m.cmp_points(b, x) != Ordering::Greater);
        self.values[idx.min(self.values.len() - 1)].clone()
    }

    pub fn map(&self, f: impl Fn(&M::V) -> M::V) -> Self {
        let values = self.values.iter().map(f).collect();
        Self::from_parts(self.model.clone(), self.breaks.clone(), values)
    }

    /// Pointwise combination over the common refinement.
    pub fn zip_with(&self, other: &Self, op: impl Fn(&M::V, &M::V) -> M::V) -> Self {
        let m = &self.model;
        let (a, b) = (&self.breaks, &other.breaks);
        let (na, nb) = (self.values.len(), other.values.len());
        let mut pts = Vec::with_capacity(na + nb + 1);
        let mut vals = Vec::with_capacity(na + nb);
        pts.push(m.point(0));
        let (mut i, mut j) = (0, 0);
        while i < na && j < nb {
            vals.push(op(&self.values[i], &other.values[j]));
            match m.cmp_points(&a[i + 1], &b[j + 1]) {
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
        Self::from_parts(m.clone(), pts, vals)
    }

    pub fn add(&self, other: &Self) -> Self {
        let m = self.model.clone();
        self.zip_with(other, |x, y| m.add(x, y))
    }

    pub fn sub(&self, other: &Self) -> Self {
        let m = self.model.clone();
        self.zip_with(other, |x, y| m.sub(x, y))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let m = self.model.clone();
        self.zip_with(other, |x, y| m.mul(x, y))
    }

    pub fn scale(&self, s: &M::V) -> Self {
        let m = self.model.clone();
        self.map(|v| m.mul(v, s))
    }

    /// Sum of many functions by pairwise reduction.
    pub fn sum(model: &M, fs: Vec<Self>) -> Self {
        let mut fs = fs;
        if fs.is_empty() {
            return Self::constant(model.clone(), model.zero());
        }
        while fs.len() > 1 {
            let mut next = Vec::with_capacity(fs.len().div_ceil(2));
            let mut it = fs.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(a.add(&b)),
                    None => next.push(a),
                }
            }
            fs = next;
        }
        fs.pop().unwrap()
    }

    fn check_ctx(&self, ctx: &BetaContext) -> Result<()> {
        if self.ctx() != ctx {
            return Err(Error::ContextMismatch);
        }
        Ok(())
    }

    /// 𝒫f(x) = β⁻¹ Σ_{j=0}^{q} f((x+j)/β).
    pub fn transfer(&self) -> Self {
        let m = &self.model;
        let ctx = m.ctx();
        let q = ctx.q();
        let one = m.point(1);
        let branches: Vec<Self> = (0..=q).map(|j| self.transfer_branch(j, &one)).collect();
        Self::sum(m, branches).map(|v| m.div_beta(v))
    }

    /// f restricted to the j-th branch domain, pushed forward by x ↦ βx − j
    /// (without the β⁻¹ factor); zero beyond the branch image.
    fn transfer_branch(&self, j: u32, one: &M::P) -> Self {
        let m = &self.model;
        let q = m.ctx().q();
        let lo = m.contract(&m.point(0), j);
        let hi = if j < q { m.contract(&m.point(0), j + 1) } else { one.clone() };
        let image_end = if j < q { one.clone() } else { m.expand(one, q) };
        let mut pts = vec![m.point(0)];
        let mut vals = Vec::new();
        for (left, right, v) in self.cells() {
            if m.cmp_points(right, &lo) != Ordering::Greater {
                continue;
            }
            if m.cmp_points(left, &hi) != Ordering::Less {
                break;
            }
            if m.cmp_points(left, &lo) == Ordering::Greater {
                pts.push(m.clamp(m.expand(left, j)));
            }
            vals.push(v.clone());
        }
        pts.push(image_end.clone());
        if m.cmp_points(&image_end, one) == Ordering::Less {
            pts.push(one.clone());
            vals.push(m.zero());
        }
        Self::from_parts(m.clone(), pts, vals)
    }

    /// 𝒫 with an explicit context check.
    pub fn transfer_apply(&self, ctx: &BetaContext) -> Result<Self> {
        self.check_ctx(ctx)?;
        Ok(self.transfer())
    }

    pub fn transfer_pow(&self, k: usize) -> Self {
        let mut f = self.clone();
        for _ in 0..k {
            f = f.transfer();
        }
        f
    }

    /// 𝔎g(x) = g(T(x)).
    pub fn koopman(&self) -> Self {
        let m = &self.model;
        let q = m.ctx().q();
        let one = m.point(1);
        let top = m.expand(&one, q);
        let mut pts = Vec::new();
        let mut vals = Vec::new();
        for j in 0..=q {
            for (left, _, v) in self.cells() {
                if j == q && m.cmp_points(left, &top) != Ordering::Less {
                    break;
                }
                pts.push(m.clamp(m.contract(left, j)));
                vals.push(v.clone());
            }
        }
        pts.push(one);
        Self::from_parts(m.clone(), pts, vals)
    }

    pub fn koopman_apply(&self, ctx: &BetaContext) -> Result<Self> {
        self.check_ctx(ctx)?;
        Ok(self.koopman())
    }

    pub fn integrate(&self) -> M::V {
        let m = &self.model;
        self.cells().fold(m.zero(), |acc, (a, b, v)| m.add(&acc, &m.mul(&m.width(a, b), v)))
    }

    /// ∫ conj(f)·g.
    pub fn inner_product(&self, other: &Self) -> M::V {
        let m = self.model.clone();
        self.zip_with(other, |x, y| m.mul(&m.conj(x), y)).integrate()
    }

    /// ∫|f| in the model's arithmetic (exact in exact mode).
    pub fn norm1_value(&self) -> M::V {
        let m = self.model.clone();
        self.map(|v| m.abs(v)).integrate()
    }

    /// ∫|f|² in the model's arithmetic.
    pub fn norm2_sq_value(&self) -> M::V {
        let m = self.model.clone();
        self.map(|v| m.mul(&m.conj(v), v)).integrate()
    }

    /// L^p norm in double precision (p ≥ 1, or ∞).
    pub fn norm(&self, p: f64) -> f64 {
        let m = &self.model;
        if p.is_infinite() {
            return self.values.iter().map(|v| m.abs_f64(v)).fold(0.0, f64::max);
        }
        let s: f64 = self
            .cells()
            .map(|(a, b, v)| {
                let w = m.point_f64(b) - m.point_f64(a);
                w * m.abs_f64(v).powf(p)
            })
            .sum();
        s.powf(1.0 / p)
    }

    /// CSV rows `(left_breakpoint, value…)` with a header row.
    pub fn to_csv(&self) -> String {
        let m = &self.model;
        let mut out = String::from("left");
        for c in m.value_columns() {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (a, _, v) in self.cells() {
            out.push_str(&m.point_text(a));
            for t in m.value_text(v) {
                out.push(',');
                out.push_str(&t);
            }
            out.push('\n');
        }
        out
    }
}

impl<S: Scalar> PiecewiseConstant<FloatModel<S>> {
    /// Float-mode function from raw parts (breakpoints clamped, tiny cells
    /// merged).
    pub fn from_f64_parts(ctx: &BetaContext, breaks: Vec<f64>, values: Vec<S>) -> Result<Self> {
        Self::new(FloatModel::new(ctx), breaks, values)
    }

    pub fn eval_f64(&self, x: f64) -> S {
        self.eval(&x)
    }

    /// Values at the given uniform-grid midpoints, for quadrature oracles.
    pub fn sample_midpoints(&self, cells: usize) -> Vec<S> {
        let mut out = Vec::with_capacity(cells);
        let mut idx = 0;
        for k in 0..cells {
            let x = (k as f64 + 0.5) / cells as f64;
            while idx + 1 < self.values.len() && self.breaks[idx + 1] <= x {
                idx += 1;
            }
            out.push(self.values[idx]);
        }
        out
    }
}

impl FloatPc {
    pub fn to_complex(&self) -> ComplexPc {
        PiecewiseConstant {
            model: FloatModel::new(self.ctx()),
            breaks: self.breaks.clone(),
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn powf(&self, e: f64) -> FloatPc {
        self.map(|v| v.powf(e))
    }
}

#[derive(Serialize)]
struct ExactSidecar {
    mode: &'static str,
    n: usize,
    q: u32,
    breakpoints: Vec<Vec<String>>,
    values: Vec<Vec<String>>,
}

fn coeff_strings(a: &AlgNum) -> Vec<String> {
    a.coeffs().iter().map(|c| c.to_string()).collect()
}

impl ExactPc {
    pub fn exact(ctx: &BetaContext, breaks: Vec<AlgNum>, values: Vec<AlgNum>) -> Result<Self> {
        Self::new(ExactModel::new(ctx), breaks, values)
    }

    pub fn one(ctx: &BetaContext) -> Self {
        Self::constant(ExactModel::new(ctx), AlgNum::one(ctx))
    }

    /// Float image with breakpoints and values rounded to doubles.
    pub fn to_float(&self) -> FloatPc {
        let ctx = self.ctx();
        let breaks = self.breaks.iter().map(|b| b.to_f64()).collect();
        let values = self.values.iter().map(|v| v.to_f64()).collect();
        PiecewiseConstant::from_parts(FloatModel::new(ctx), breaks, values)
    }

    pub fn to_complex(&self) -> ComplexPc {
        self.to_float().to_complex()
    }

    /// Exact coefficient vectors of breakpoints and values (JSON sidecar to
    /// the decimal CSV).
    pub fn sidecar_json(&self) -> String {
        let ctx = self.ctx();
        serde_json::to_string(&ExactSidecar {
            mode: "exact",
            n: ctx.n(),
            q: ctx.q(),
            breakpoints: self.breaks.iter().map(coeff_strings).collect(),
            values: self.values.iter().map(coeff_strings).collect(),
        })
        .expect("serializable")
    }

    /// Largest coefficient bit length among values and breakpoints.
    pub fn bit_size(&self) -> u64 {
        self.breaks.iter().chain(&self.values).map(|a| a.bit_size()).max().unwrap_or(0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| v.sign() != Ordering::Less)
    }

    pub fn equals(&self, other: &ExactPc) -> bool {
        self.sub(other).values.iter().all(|v| v.is_zero())
    }
}

/// ⟨𝒫f, g⟩ − ⟨f, 𝔎g⟩.
pub fn duality_check<M: Model>(
    ctx: &BetaContext,
    f: &PiecewiseConstant<M>,
    g: &PiecewiseConstant<M>,
) -> Result<M::V> {
    let lhs = f.transfer_apply(ctx)?.inner_product(g);
    let rhs = f.inner_product(&g.koopman_apply(ctx)?);
    Ok(f.model.sub(&lhs, &rhs))
}

/// ‖u^{1/p}·𝔎(u^{−1/p}·f)‖_p − ‖f‖_p for an invariant density u.
pub fn weighted_isometry_check<S: Scalar>(
    f: &PiecewiseConstant<FloatModel<S>>,
    u1: &FloatPc,
    p: f64,
) -> f64 {
    let lift = |g: &FloatPc| -> PiecewiseConstant<FloatModel<S>> {
        PiecewiseConstant {
            model: f.model.clone(),
            breaks: g.breaks.clone(),
            values: g.values.iter().map(|&v| S::from_f64(v)).collect(),
        }
    };
    let down = lift(&u1.powf(-1.0 / p));
    let up = lift(&u1.powf(1.0 / p));
    let image = f.mul(&down).koopman().mul(&up);
    image.norm(p) - f.norm(p)
}
