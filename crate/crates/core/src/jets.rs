//! Truncated Taylor arithmetic ("jets").
//!
//! A jet of order `K` about a center `x0` stores the scaled Taylor
//! coefficients `c[k] = f^(k)(x0) / k!` for `|k| <= K`. [`Jet1`] is the
//! univariate case. [`JetN`] is multivariate with total degree `K`.
//!
//! Univariate elementary functions use the classical recurrences obtained by
//! differentiating `g = phi(f)` once and matching coefficients:
//!
//! ```text
//! exp:   g' = f' g                 k g_k = sum_{j=1..k} j f_j g_{k-j}
//! ln:    f g' = f'                 g_k = (f_k - 1/k sum_{j=1..k-1} j g_j f_{k-j}) / f_0
//! sin:   s' = f' c,  c' = -f' s    (computed as a pair)
//! tan:   g' = f' (1 + g^2)
//! tanh:  g' = f' (1 - g^2)
//! sqrt:  g^2 = f                   g_k = (f_k - sum_{j=1..k-1} g_j g_{k-j}) / (2 g_0)
//! ```
//!
//! Multivariate jets compose a univariate series with the nilpotent part
//! `f - f_0` by Horner's rule, which needs `K` jet products.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Binary jet operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Unary jet operations. `PowInt` uses repeated squaring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Tanh,
    Sqrt,
    PowInt(i64),
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::PowInt(_) => "pow",
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

// ---------------------------------------------------------------------------
// Univariate series kernels shared by both jet types.

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
        .collect()
}

fn series_div(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if b[0] == 0.0 {
        return Err(Error::Singularity(
            "division by a jet with zero constant term".into(),
        ));
    }
    let mut c = vec![0.0; a.len()];
    for k in 0..a.len() {
        let mut s = a[k];
        for j in 1..=k {
            s -= b[j] * c[k - j];
        }
        c[k] = s / b[0];
    }
    Ok(c)
}

fn series_exp(a: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; a.len()];
    c[0] = libm::exp(a[0]);
    for k in 1..a.len() {
        let s: f64 = (1..=k).map(|j| j as f64 * a[j] * c[k - j]).sum();
        c[k] = s / k as f64;
    }
    c
}

fn series_ln(a: &[f64]) -> Result<Vec<f64>> {
    if a[0] <= 0.0 {
        return Err(Error::Singularity(format!(
            "ln of non-positive constant term {}",
            a[0]
        )));
    }
    let mut c = vec![0.0; a.len()];
    c[0] = libm::log(a[0]);
    for k in 1..a.len() {
        let s: f64 = (1..k).map(|j| j as f64 * c[j] * a[k - j]).sum();
        c[k] = (a[k] - s / k as f64) / a[0];
    }
    Ok(c)
}

fn series_sin_cos(a: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut s = vec![0.0; n];
    let mut c = vec![0.0; n];
    s[0] = libm::sin(a[0]);
    c[0] = libm::cos(a[0]);
    for k in 1..n {
        let mut ss = 0.0;
        let mut cc = 0.0;
        for j in 1..=k {
            ss += j as f64 * a[j] * c[k - j];
            cc += j as f64 * a[j] * s[k - j];
        }
        s[k] = ss / k as f64;
        c[k] = -cc / k as f64;
    }
    (s, c)
}

/// `g' = f' (1 + sign g^2)`, shared by tan (`sign = 1`) and tanh (`sign = -1`).
fn series_tan_like(a: &[f64], g0: f64, sign: f64) -> Vec<f64> {
    let n = a.len();
    let mut g = vec![0.0; n];
    let mut w = vec![0.0; n];
    g[0] = g0;
    w[0] = 1.0 + sign * g0 * g0;
    for k in 1..n {
        let s: f64 = (1..=k).map(|j| j as f64 * a[j] * w[k - j]).sum();
        g[k] = s / k as f64;
        let sq: f64 = (0..=k).map(|i| g[i] * g[k - i]).sum();
        w[k] = sign * sq;
    }
    g
}

fn series_sqrt(a: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if a[0] < 0.0 || (a[0] == 0.0 && n > 1) {
        return Err(Error::Singularity(format!(
            "sqrt of non-positive constant term {}",
            a[0]
        )));
    }
    let mut c = vec![0.0; n];
    c[0] = libm::sqrt(a[0]);
    for k in 1..n {
        let s: f64 = (1..k).map(|j| c[j] * c[k - j]).sum();
        c[k] = (a[k] - s) / (2.0 * c[0]);
    }
    Ok(c)
}

/// Repeated squaring over any multiplication.
fn pow_by_squaring<T: Clone>(
    base: &T,
    n: u64,
    one: T,
    mul: &dyn Fn(&T, &T) -> Result<T>,
) -> Result<T> {
    let mut result = one;
    let mut sq = base.clone();
    let mut e = n;
    let mut first = true;
    while e > 0 {
        if e & 1 == 1 {
            result = if first {
                sq.clone()
            } else {
                mul(&result, &sq)?
            };
            first = false;
        }
        e >>= 1;
        if e > 0 {
            sq = mul(&sq, &sq)?;
        }
    }
    Ok(result)
}

fn series_unary(a: &[f64], op: UnaryOp) -> Result<Vec<f64>> {
    Ok(match op {
        UnaryOp::Neg => a.iter().map(|v| -v).collect(),
        UnaryOp::Exp => series_exp(a),
        UnaryOp::Ln => series_ln(a)?,
        UnaryOp::Sin => series_sin_cos(a).0,
        UnaryOp::Cos => series_sin_cos(a).1,
        UnaryOp::Tan => series_tan_like(a, libm::tan(a[0]), 1.0),
        UnaryOp::Tanh => series_tan_like(a, libm::tanh(a[0]), -1.0),
        UnaryOp::Sqrt => series_sqrt(a)?,
        UnaryOp::PowInt(n) => {
            let mut one = vec![0.0; a.len()];
            one[0] = 1.0;
            let p = pow_by_squaring(&a.to_vec(), n.unsigned_abs(), one.clone(), &|x, y| {
                Ok(series_mul(x, y))
            })?;
            if n < 0 {
                series_div(&one, &p)?
            } else {
                p
            }
        }
    })
}

// ---------------------------------------------------------------------------

/// Univariate jet of arbitrary order.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1 {
    center: f64,
    coeffs: Vec<f64>,
}

impl Jet1 {
    /// Builds a jet from scaled coefficients `f^(k)/k!`. The order is `len - 1`.
    pub fn from_coeffs(center: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Usage("a jet needs at least one coefficient".into()));
        }
        Ok(Self { center, coeffs })
    }

    pub fn constant(center: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    /// The identity function `x` expanded about `center`.
    pub fn variable(center: f64, order: usize) -> Self {
        let mut j = Self::constant(center, center, order);
        if order > 0 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `f^(k)(center)`, or `None` beyond the stored order.
    pub fn partial(&self, k: usize) -> Option<f64> {
        self.coeffs.get(k).map(|c| c * factorial(k))
    }

    /// Evaluates the truncated polynomial at `center + t`.
    pub fn eval_offset(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        Self {
            center: self.center,
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    /// The derivative jet, one order lower.
    pub fn derivative(&self) -> Result<Self> {
        if self.order() == 0 {
            return Err(Error::Usage("cannot differentiate an order-0 jet".into()));
        }
        let coeffs = (1..self.coeffs.len())
            .map(|k| k as f64 * self.coeffs[k])
            .collect();
        Ok(Self {
            center: self.center,
            coeffs,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            center: self.center,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::Usage(format!(
                "jet order mismatch: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        if self.center != other.center {
            return Err(Error::Usage(format!(
                "jet center mismatch: {} vs {}",
                self.center, other.center
            )));
        }
        Ok(())
    }

    pub fn binary(&self, op: BinaryOp, other: &Self) -> Result<Self> {
        self.check(other)?;
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = match op {
            BinaryOp::Add => a.iter().zip(b).map(|(x, y)| x + y).collect(),
            BinaryOp::Sub => a.iter().zip(b).map(|(x, y)| x - y).collect(),
            BinaryOp::Mul => series_mul(a, b),
            BinaryOp::Div => series_div(a, b)?,
        };
        Ok(Self {
            center: self.center,
            coeffs,
        })
    }

    pub fn unary(&self, op: UnaryOp) -> Result<Self> {
        Ok(Self {
            center: self.center,
            coeffs: series_unary(&self.coeffs, op)?,
        })
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.binary(BinaryOp::Add, o)
    }
    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.binary(BinaryOp::Sub, o)
    }
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.binary(BinaryOp::Mul, o)
    }
    pub fn div(&self, o: &Self) -> Result<Self> {
        self.binary(BinaryOp::Div, o)
    }
    pub fn recip(&self) -> Result<Self> {
        Self::constant(self.center, 1.0, self.order()).div(self)
    }
}

/// Applies a binary operation to two univariate jets.
pub fn jet_binary(op: BinaryOp, a: &Jet1, b: &Jet1) -> Result<Jet1> {
    a.binary(op, b)
}

/// Applies a unary operation to a univariate jet.
pub fn jet_unary(op: UnaryOp, a: &Jet1) -> Result<Jet1> {
    a.unary(op)
}

// ---------------------------------------------------------------------------

#[derive(Debug)]
struct Layout {
    dim: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    lookup: BTreeMap<Vec<u8>, usize>,
    factorials: Vec<f64>,
    // Products: for output `o`, pairs `mul_pairs[mul_ptr[o]..mul_ptr[o+1]]`.
    mul_ptr: Vec<usize>,
    mul_pairs: Vec<(u32, u32)>,
    lower: Option<Arc<Layout>>,
    // shift[axis][i] = position in this layout of `lower.indices[i] + e_axis`.
    shift: Vec<Vec<usize>>,
}

fn indices_of_degree(dim: usize, degree: usize, out: &mut Vec<Vec<u8>>) {
    fn rec(prefix: &mut Vec<u8>, dim: usize, left: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k as u8);
            rec(prefix, dim, left - k, out);
            prefix.pop();
        }
    }
    rec(&mut Vec::with_capacity(dim), dim, degree, out);
}

impl Layout {
    fn build(dim: usize, order: usize) -> Arc<Layout> {
        let lower = if order > 0 {
            Some(Layout::build(dim, order - 1))
        } else {
            None
        };
        let mut indices = Vec::new();
        for deg in 0..=order {
            indices_of_degree(dim, deg, &mut indices);
        }
        let lookup: BTreeMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let factorials = indices
            .iter()
            .map(|m| m.iter().map(|&k| factorial(k as usize)).product())
            .collect();
        let mut mul_ptr = vec![0];
        let mut mul_pairs = Vec::new();
        let mut diff = vec![0u8; dim];
        for m in &indices {
            let deg: usize = m.iter().map(|&k| k as usize).sum();
            for (i, mi) in indices.iter().enumerate() {
                if mi.iter().map(|&k| k as usize).sum::<usize>() > deg {
                    break;
                }
                if mi.iter().zip(m).all(|(a, b)| a <= b) {
                    for ax in 0..dim {
                        diff[ax] = m[ax] - mi[ax];
                    }
                    mul_pairs.push((i as u32, lookup[&diff[..]] as u32));
                }
            }
            mul_ptr.push(mul_pairs.len());
        }
        let shift = match &lower {
            Some(low) => (0..dim)
                .map(|ax| {
                    low.indices
                        .iter()
                        .map(|m| {
                            let mut up = m.clone();
                            up[ax] += 1;
                            lookup[&up]
                        })
                        .collect()
                })
                .collect(),
            None => Vec::new(),
        };
        Arc::new(Layout {
            dim,
            order,
            indices,
            lookup,
            factorials,
            mul_ptr,
            mul_pairs,
            lower,
            shift,
        })
    }

    fn at_order(self: &Arc<Self>, order: usize) -> Arc<Layout> {
        let mut l = self.clone();
        while l.order > order {
            l = l.lower.clone().expect("lower layout");
        }
        l
    }
}

impl Layout {
    /// `out = a * b` truncated to this layout.
    fn mul_into(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        for (o, slot) in out.iter_mut().enumerate() {
            // -0.0 is the additive identity; +0.0 would turn a lone -0 product into +0.
            let mut acc = -0.0;
            for &(i, j) in &self.mul_pairs[self.mul_ptr[o]..self.mul_ptr[o + 1]] {
                acc += a[i as usize] * b[j as usize];
            }
            *slot = acc;
        }
    }
}

/// Precomputed multi-index tables for jets of a given dimension and order.
///
/// Cheap to clone. Jets built from equal spaces interoperate even when the
/// spaces were created separately.
#[derive(Debug, Clone)]
pub struct JetSpace(Arc<Layout>);

impl JetSpace {
    pub fn new(dim: usize, order: usize) -> Self {
        assert!(dim >= 1, "jet dimension must be positive");
        JetSpace(Layout::build(dim, order))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn order(&self) -> usize {
        self.0.order
    }

    /// Number of coefficients.
    pub fn len(&self) -> usize {
        self.0.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Multi-indices in storage order (graded by total degree).
    pub fn indices(&self) -> impl Iterator<Item = &[u8]> {
        self.0.indices.iter().map(|v| v.as_slice())
    }

    pub fn constant(&self, center: &[f64], value: f64) -> JetN {
        assert_eq!(center.len(), self.dim(), "center dimension");
        let mut coeffs = vec![0.0; self.len()];
        coeffs[0] = value;
        JetN {
            layout: self.0.clone(),
            center: Arc::from(center),
            coeffs,
        }
    }

    /// The coordinate function `x_axis` expanded about `center`.
    pub fn variable(&self, center: &[f64], axis: usize) -> JetN {
        let mut j = self.constant(center, center[axis]);
        if self.order() > 0 {
            let mut m = vec![0u8; self.dim()];
            m[axis] = 1;
            let idx = self.0.lookup[&m];
            j.coeffs[idx] = 1.0;
        }
        j
    }
}

/// Multivariate jet with total degree `order`.
#[derive(Debug, Clone)]
pub struct JetN {
    layout: Arc<Layout>,
    center: Arc<[f64]>,
    coeffs: Vec<f64>,
}

impl PartialEq for JetN {
    fn eq(&self, other: &Self) -> bool {
        self.layout.dim == other.layout.dim
            && self.layout.order == other.layout.order
            && self.center == other.center
            && self.coeffs == other.coeffs
    }
}

impl JetN {
    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Scaled coefficients in storage order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn space(&self) -> JetSpace {
        JetSpace(self.layout.clone())
    }

    /// Scaled coefficient `d^k f / k!` for multi-index `k`.
    pub fn coeff(&self, k: &[u8]) -> Option<f64> {
        self.layout.lookup.get(k).map(|&i| self.coeffs[i])
    }

    /// The mixed partial derivative `d^k f` at the center.
    pub fn partial(&self, k: &[u8]) -> Option<f64> {
        self.layout
            .lookup
            .get(k)
            .map(|&i| self.coeffs[i] * self.layout.factorials[i])
    }

    /// Partial derivative given as a list of axes, e.g. `[0, 0, 1]` for `f_xxy`.
    pub fn d(&self, axes: &[usize]) -> f64 {
        let mut k = vec![0u8; self.dim()];
        for &a in axes {
            k[a] += 1;
        }
        self.partial(&k)
            .unwrap_or_else(|| panic!("partial {:?} exceeds jet order {}", axes, self.order()))
    }

    pub fn truncate(&self, order: usize) -> JetN {
        if order >= self.order() {
            return self.clone();
        }
        let layout = self.layout.at_order(order);
        let n = layout.indices.len();
        JetN {
            layout,
            center: self.center.clone(),
            coeffs: self.coeffs[..n].to_vec(),
        }
    }

    /// The jet of `df/dx_axis`, one order lower.
    pub fn derivative(&self, axis: usize) -> Result<JetN> {
        let lower = self
            .layout
            .lower
            .clone()
            .ok_or_else(|| Error::Usage("cannot differentiate an order-0 jet".into()))?;
        let shift = &self.layout.shift[axis];
        let coeffs = lower
            .indices
            .iter()
            .zip(shift)
            .map(|(m, &up)| (m[axis] as f64 + 1.0) * self.coeffs[up])
            .collect();
        Ok(JetN {
            layout: lower,
            center: self.center.clone(),
            coeffs,
        })
    }

    /// Repeated derivative along the listed axes.
    pub fn derivatives(&self, axes: &[usize]) -> Result<JetN> {
        let mut j = self.clone();
        for &a in axes {
            j = j.derivative(a)?;
        }
        Ok(j)
    }

    pub fn constant_like(&self, value: f64) -> JetN {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        JetN {
            layout: self.layout.clone(),
            center: self.center.clone(),
            coeffs,
        }
    }

    pub fn scale(&self, s: f64) -> JetN {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn add_scalar(&self, s: f64) -> JetN {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() || self.order() != other.order() {
            return Err(Error::Usage(format!(
                "jet shape mismatch: (dim {}, order {}) vs (dim {}, order {})",
                self.dim(),
                self.order(),
                other.dim(),
                other.order()
            )));
        }
        if !Arc::ptr_eq(&self.center, &other.center) && self.center != other.center {
            return Err(Error::Usage(format!(
                "jet center mismatch: {:?} vs {:?}",
                &self.center[..],
                &other.center[..]
            )));
        }
        Ok(())
    }

    fn mul_raw(&self, other: &Self) -> JetN {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        self.layout
            .mul_into(&self.coeffs, &other.coeffs, &mut coeffs);
        JetN {
            layout: self.layout.clone(),
            center: self.center.clone(),
            coeffs,
        }
    }

    fn div_raw(&self, other: &Self) -> Result<JetN> {
        let b = &other.coeffs;
        if b[0] == 0.0 {
            return Err(Error::Singularity(
                "division by a jet with zero constant term".into(),
            ));
        }
        let l = &self.layout;
        let mut c = vec![0.0; b.len()];
        for o in 0..b.len() {
            let mut s = self.coeffs[o];
            for &(i, j) in &l.mul_pairs[l.mul_ptr[o]..l.mul_ptr[o + 1]] {
                if i != 0 {
                    s -= b[i as usize] * c[j as usize];
                }
            }
            c[o] = s / b[0];
        }
        Ok(JetN {
            layout: self.layout.clone(),
            center: self.center.clone(),
            coeffs: c,
        })
    }

    pub fn binary(&self, op: BinaryOp, other: &Self) -> Result<JetN> {
        self.check(other)?;
        Ok(match op {
            BinaryOp::Add | BinaryOp::Sub => {
                let sign = if op == BinaryOp::Add { 1.0 } else { -1.0 };
                let mut out = self.clone();
                out.coeffs
                    .iter_mut()
                    .zip(&other.coeffs)
                    .for_each(|(x, y)| *x += sign * y);
                out
            }
            BinaryOp::Mul => self.mul_raw(other),
            BinaryOp::Div => self.div_raw(other)?,
        })
    }

    pub fn unary(&self, op: UnaryOp) -> Result<JetN> {
        match op {
            UnaryOp::Neg => return Ok(self.scale(-1.0)),
            UnaryOp::PowInt(n) => {
                let one = self.constant_like(1.0);
                let p =
                    pow_by_squaring(
                        self,
                        n.unsigned_abs(),
                        one.clone(),
                        &|x, y| Ok(x.mul_raw(y)),
                    )?;
                return if n < 0 { one.div_raw(&p) } else { Ok(p) };
            }
            _ => {}
        }
        let k = self.order();
        let mut ident = vec![0.0; k + 1];
        ident[0] = self.coeffs[0];
        if k > 0 {
            ident[1] = 1.0;
        }
        let phi = series_unary(&ident, op)?;
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut r = self.constant_like(phi[k]);
        let mut scratch = vec![0.0; r.coeffs.len()];
        for &p in phi[..k].iter().rev() {
            self.layout.mul_into(&r.coeffs, &delta.coeffs, &mut scratch);
            core::mem::swap(&mut r.coeffs, &mut scratch);
            r.coeffs[0] += p;
        }
        Ok(r)
    }

    pub fn add(&self, o: &Self) -> Result<JetN> {
        self.binary(BinaryOp::Add, o)
    }
    pub fn sub(&self, o: &Self) -> Result<JetN> {
        self.binary(BinaryOp::Sub, o)
    }
    pub fn mul(&self, o: &Self) -> Result<JetN> {
        self.binary(BinaryOp::Mul, o)
    }
    pub fn div(&self, o: &Self) -> Result<JetN> {
        self.binary(BinaryOp::Div, o)
    }
}

/// Numbers the expression evaluator can compute with.
pub trait Scalar: Clone {
    /// A constant of the same shape as `self`.
    fn lift(&self, v: f64) -> Self;
    fn value(&self) -> f64;
    fn binary(&self, op: BinaryOp, other: &Self) -> Result<Self>;
    fn unary(&self, op: UnaryOp) -> Result<Self>;
}

impl Scalar for f64 {
    fn lift(&self, v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn binary(&self, op: BinaryOp, other: &Self) -> Result<Self> {
        Ok(match op {
            BinaryOp::Add => self + other,
            BinaryOp::Sub => self - other,
            BinaryOp::Mul => self * other,
            BinaryOp::Div => {
                if *other == 0.0 {
                    return Err(Error::Singularity("division by zero".into()));
                }
                self / other
            }
        })
    }
    fn unary(&self, op: UnaryOp) -> Result<Self> {
        Ok(series_unary(&[*self], op)?[0])
    }
}

impl Scalar for Jet1 {
    fn lift(&self, v: f64) -> Self {
        Jet1::constant(self.center, v, self.order())
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn binary(&self, op: BinaryOp, other: &Self) -> Result<Self> {
        Jet1::binary(self, op, other)
    }
    fn unary(&self, op: UnaryOp) -> Result<Self> {
        Jet1::unary(self, op)
    }
}

impl Scalar for JetN {
    fn lift(&self, v: f64) -> Self {
        self.constant_like(v)
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn binary(&self, op: BinaryOp, other: &Self) -> Result<Self> {
        JetN::binary(self, op, other)
    }
    fn unary(&self, op: UnaryOp) -> Result<Self> {
        JetN::unary(self, op)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn product_of_linear_jets() {
        let x = Jet1::variable(0.0, 2);
        let one = Jet1::constant(0.0, 1.0, 2);
        let p = one.add(&x).unwrap().mul(&one.sub(&x).unwrap()).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn reciprocal_of_exp() {
        let e = Jet1::from_coeffs(0.0, vec![1.0, 1.0, 0.5]).unwrap();
        let r = e.recip().unwrap();
        assert_eq!(r.coeffs(), &[1.0, -1.0, 0.5]);
    }

    #[test]
    fn exp_of_identity() {
        let e = Jet1::variable(0.0, 3).unary(UnaryOp::Exp).unwrap();
        let want = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (a, b) in e.coeffs().iter().zip(want) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn singular_operations() {
        let z = Jet1::variable(0.0, 2);
        assert!(matches!(z.recip(), Err(Error::Singularity(_))));
        assert!(matches!(z.unary(UnaryOp::Ln), Err(Error::Singularity(_))));
        assert!(matches!(z.unary(UnaryOp::Sqrt), Err(Error::Singularity(_))));
        let w = Jet1::variable(1.0, 2);
        assert!(matches!(z.add(&w), Err(Error::Usage(_))));
        assert!(matches!(
            z.add(&Jet1::variable(0.0, 3)),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn partial_scales_by_factorial() {
        let x = Jet1::variable(2.0, 4);
        let p = x.unary(UnaryOp::PowInt(4)).unwrap();
        // d^3/dx^3 x^4 = 24 x
        assert!(close(p.partial(3).unwrap(), 48.0, 1e-15));
        assert_eq!(p.partial(5), None);
    }

    #[test]
    fn negative_integer_power() {
        let x = Jet1::variable(2.0, 2);
        let p = x.unary(UnaryOp::PowInt(-2)).unwrap();
        // x^-2 at 2: 1/4, -2/8, 6/16 / 2
        assert!(close(p.coeffs()[0], 0.25, 1e-15));
        assert!(close(p.coeffs()[1], -0.25, 1e-15));
        assert!(close(p.coeffs()[2], 0.1875, 1e-15));
    }

    #[test]
    fn tan_and_tanh_derivatives() {
        let x = Jet1::variable(0.3, 3);
        let t = x.unary(UnaryOp::Tan).unwrap();
        let sec2 = 1.0 / libm::cos(0.3).powi(2);
        assert!(close(t.partial(1).unwrap(), sec2, 1e-14));
        assert!(close(
            t.partial(2).unwrap(),
            2.0 * sec2 * libm::tan(0.3),
            1e-14
        ));
        let th = x.unary(UnaryOp::Tanh).unwrap();
        let s = 1.0 - libm::tanh(0.3).powi(2);
        assert!(close(th.partial(1).unwrap(), s, 1e-14));
        assert!(close(
            th.partial(2).unwrap(),
            -2.0 * libm::tanh(0.3) * s,
            1e-14
        ));
    }

    #[test]
    fn multivariate_layout_and_product() {
        let sp = JetSpace::new(2, 3);
        assert_eq!(sp.len(), 10);
        let c = [0.5, -0.25];
        let x = sp.variable(&c, 0);
        let y = sp.variable(&c, 1);
        let p = x.mul(&y).unwrap().mul(&y).unwrap(); // x y^2
        assert_eq!(p.d(&[0, 1, 1]), 2.0);
        assert_eq!(p.d(&[1, 1]), 2.0 * 0.5);
        assert_eq!(p.d(&[0]), 0.0625);
        let dp = p.derivative(1).unwrap(); // 2 x y
        assert_eq!(dp.order(), 2);
        assert_eq!(dp.d(&[0, 1]), 2.0);
    }

    #[test]
    fn multivariate_exp_matches_closed_form() {
        let sp = JetSpace::new(2, 4);
        let c = [0.2, 0.7];
        let x = sp.variable(&c, 0);
        let y = sp.variable(&c, 1);
        let e = x.add(&y).unwrap().unary(UnaryOp::Exp).unwrap();
        let v = libm::exp(0.9);
        for k in sp.indices() {
            let got = e.partial(k).unwrap();
            assert!(close(got, v, 1e-14), "{k:?}: {got} vs {v}");
        }
    }

    #[test]
    fn multivariate_division_inverts_product() {
        let sp = JetSpace::new(3, 4);
        let c = [0.1, 0.2, 0.3];
        let x = sp.variable(&c, 0);
        let y = sp.variable(&c, 1);
        let z = sp.variable(&c, 2);
        let a = x
            .unary(UnaryOp::Sin)
            .unwrap()
            .add(&y.mul(&z).unwrap())
            .unwrap()
            .add_scalar(2.0);
        let b = y.unary(UnaryOp::Exp).unwrap();
        let q = a.div(&b).unwrap().mul(&b).unwrap();
        for (u, v) in q.coeffs().iter().zip(a.coeffs()) {
            assert!((u - v).abs() < 1e-13);
        }
    }
}
