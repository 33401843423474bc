//! Explicit compact stencils in two or more dimensions.
//!
//! Every function here evaluates one link coefficient `C_p` at the midpoint
//! of the link, or the right-hand side `f_h` at a grid node, from jets of the
//! problem fields at that point. Link coefficients satisfy `C_p = C_{-p}` when
//! both are evaluated at the same midpoint, so a link shared by two rows gets
//! one value.
//!
//! Schemes and their orientation (sign relating `sum_p C_p u(x + p h)` to
//! `-div(a grad u)`):
//!
//! | scheme | fields used | `C_0` for `a = 1` | orientation |
//! |--------|-------------|-------------------|-------------|
//! | 2D fourth order | `a` | `-10/3` | negative |
//! | 3D fourth order | `a` | `-64/15` | negative |
//! | any-d fourth order | `ta = -ln a`, `tf = -f/a` | positive | positive |
//! | 2D sixth order | `ta`, `tf` | `20` | positive |

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jets::JetN;

/// One stencil: the coefficient of every offset in `{-1,0,1}^d` and `f_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilInstance {
    pub center: Vec<f64>,
    pub h: f64,
    /// `(offset, C_offset)` for all `3^d` offsets, center included.
    pub coefficients: Vec<(Vec<i8>, f64)>,
    pub rhs: f64,
}

impl StencilInstance {
    pub fn coefficient(&self, p: &[i8]) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|(q, _)| q.as_slice() == p)
            .map(|(_, c)| *c)
    }

    /// `sum_p C_p v(center + p h) - f_h` for a function `v`.
    pub fn residual(&self, v: &mut dyn FnMut(&[f64]) -> Result<f64>) -> Result<f64> {
        let mut x = self.center.clone();
        let mut sum = 0.0;
        for (p, c) in &self.coefficients {
            for (k, (xk, pk)) in x.iter_mut().zip(p).enumerate() {
                *xk = self.center[k] + *pk as f64 * self.h;
            }
            sum += c * v(&x)?;
        }
        Ok(sum - self.rhs)
    }
}

/// Flips `p` so its first nonzero component is positive.
pub fn canonical(p: &[i8]) -> Vec<i8> {
    match p.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => p.iter().map(|v| -v).collect(),
        _ => p.to_vec(),
    }
}

fn expect_dim(j: &JetN, dim: usize, min_order: usize) -> Result<()> {
    if j.dim() != dim || j.order() < min_order {
        return Err(Error::Usage(format!(
            "expected a jet of dimension {dim} and order >= {min_order}, got ({}, {})",
            j.dim(),
            j.order()
        )));
    }
    Ok(())
}

fn bad_offset(p: &[i8]) -> Error {
    Error::Usage(format!("offset {p:?} is not a nonzero stencil offset"))
}

// ---------------------------------------------------------------------------
// Fourth order, 2D and 3D, in terms of `a`.

/// 2D fourth-order link coefficient from a jet of `a` (order >= 2) at the midpoint.
pub fn o4_2d_link(a: &JetN, p: &[i8], h: f64) -> Result<f64> {
    expect_dim(a, 2, 2)?;
    let (v, ax, ay) = (a.value(), a.d(&[0]), a.d(&[1]));
    let (axx, axy, ayy) = (a.d(&[0, 0]), a.d(&[0, 1]), a.d(&[1, 1]));
    let h2 = h * h;
    let q = canonical(p);
    Ok(match (q[0], q[1]) {
        (1, 1) => v / 6.0 - ax * ay / (24.0 * v) * h2 + (4.0 * axy - axx) * h2 / 48.0,
        (1, -1) => v / 6.0 + (ax * ay / (24.0 * v) - axx / 48.0) * h2,
        (1, 0) => {
            2.0 * v / 3.0 - ax * ax / (12.0 * v) * h2 + (2.0 * axx - 2.0 * axy - ayy) * h2 / 24.0
        }
        (0, 1) => 2.0 * v / 3.0 - ay * ay / (12.0 * v) * h2 + (ayy - 2.0 * axy) * h2 / 24.0,
        _ => return Err(bad_offset(p)),
    })
}

/// 3D fourth-order link coefficient from a jet of `a` (order >= 2) at the midpoint.
pub fn o4_3d_link(a: &JetN, p: &[i8], h: f64) -> Result<f64> {
    expect_dim(a, 3, 2)?;
    let v = a.value();
    let (ax, ay, az) = (a.d(&[0]), a.d(&[1]), a.d(&[2]));
    let (axx, ayy, azz) = (a.d(&[0, 0]), a.d(&[1, 1]), a.d(&[2, 2]));
    let (axy, axz, ayz) = (a.d(&[0, 1]), a.d(&[0, 2]), a.d(&[1, 2]));
    let h2 = h * h;
    let q = canonical(p);
    Ok(match (q[0], q[1], q[2]) {
        (1, 0, 0) => 7.0 * v / 15.0,
        (0, 1, 1) => v / 10.0,
        (1, -1, 1) => v / 30.0 - ay * ay / (24.0 * v) * h2,
        (0, 1, -1) => v / 10.0 + ay * az / (12.0 * v) * h2,
        (1, 0, -1) => v / 10.0 + ax * az / (12.0 * v) * h2,
        (1, 1, -1) => v / 30.0 + (ay * ay - ax * ax) / (24.0 * v) * h2,
        (0, 1, 0) => 7.0 * v / 15.0 + az * (ax - ay) / (12.0 * v) * h2,
        (1, 1, 1) => v / 30.0 + (ayy + axz + ayz - axx) * h2 / 24.0,
        (1, 0, 1) => v / 10.0 + (ay * ay - ax * ax) / (12.0 * v) * h2 + (axx - ayy) * h2 / 12.0,
        (0, 0, 1) => {
            7.0 * v / 15.0
                + (2.0 * ax * ax - ay * ay - az * az - ax * az - ay * az) / (12.0 * v) * h2
                + (ayy + azz - 3.0 * axx - 2.0 * ayz) * h2 / 24.0
        }
        (1, -1, 0) => {
            v / 10.0
                + (ax * ax + ax * ay - ax * az) / (24.0 * v) * h2
                + (3.0 * ayy - 3.0 * axx - azz + 2.0 * axz - 2.0 * axy - 2.0 * ayz) * h2 / 48.0
        }
        (1, 1, 0) => {
            v / 10.0
                + (ax * ax - 2.0 * ay * ay - ax * ay - ax * az) / (24.0 * v) * h2
                + (axx - ayy - azz + 2.0 * axy - 2.0 * axz - 2.0 * ayz) * h2 / 48.0
        }
        (1, -1, -1) => v / 30.0 - ax * ax / (24.0 * v) * h2 + (axx + ayz - ayy - axz) * h2 / 24.0,
        _ => return Err(bad_offset(p)),
    })
}

/// Right-hand side shared by the 2D and 3D fourth-order stencils:
/// `-f h^2 + h^4 / (12 a^2) (a (f lap a + grad a . grad f) - a^2 lap f - |grad a|^2 f)`.
pub fn o4_rhs(a: &JetN, f: &JetN, h: f64) -> Result<f64> {
    expect_dim(a, f.dim(), 2)?;
    expect_dim(f, a.dim(), 2)?;
    let d = a.dim();
    let (av, fv) = (a.value(), f.value());
    let lap_a: f64 = (0..d).map(|i| a.d(&[i, i])).sum();
    let lap_f: f64 = (0..d).map(|i| f.d(&[i, i])).sum();
    let ga_gf: f64 = (0..d).map(|i| a.d(&[i]) * f.d(&[i])).sum();
    let ga2: f64 = (0..d).map(|i| a.d(&[i]) * a.d(&[i])).sum();
    let h2 = h * h;
    Ok(-fv * h2
        + (av * (fv * lap_a + ga_gf) - av * av * lap_f - ga2 * fv) / (12.0 * av * av) * h2 * h2)
}

// ---------------------------------------------------------------------------
// Fourth order in any dimension, in terms of `ta = -ln a`.

/// Any-dimension fourth-order link coefficient.
///
/// `a` is the value of the coefficient and `ta` a jet of `-ln a` (order >= 2),
/// both at the midpoint. Offsets with more than two nonzero components get 0.
pub fn dd_o4_link(a: f64, ta: &JetN, p: &[i8], h: f64) -> Result<f64> {
    expect_dim(ta, p.len(), 2)?;
    let d = p.len();
    let nz: Vec<usize> = (0..d).filter(|&i| p[i] != 0).collect();
    let h2 = h * h;
    let g = |i: usize| ta.d(&[i]);
    let dd = |i: usize, j: usize| ta.d(&[i, j]);
    Ok(match nz.as_slice() {
        [] => return Err(bad_offset(p)),
        [i] => {
            let i = *i;
            let axis = a * (-1.0 + h2 / 24.0 * (dd(i, i) + g(i) * g(i)));
            let mut pair_sum = 0.0;
            for k in (0..d).filter(|&k| k != i) {
                pair_sum += a
                    * (-2.0 / 3.0 + h2 / 24.0 * (g(i) * g(i) + g(k) * g(k) + dd(i, i) - dd(k, k)));
            }
            pair_sum - (d as f64 - 2.0) * axis
        }
        [i, j] => {
            let same = p[*i] == p[*j];
            let cross = h2 * dd(*i, *j) / 24.0;
            if same {
                a * (-1.0 / 6.0 + cross)
            } else {
                a * (-1.0 / 6.0 - cross)
            }
        }
        _ => 0.0,
    })
}

/// `f_h = -a (h^2 tf + h^4 / 12 (lap tf - grad ta . grad tf))` at a node.
pub fn dd_o4_rhs(a: f64, ta: &JetN, tf: &JetN, h: f64) -> Result<f64> {
    expect_dim(ta, tf.dim(), 1)?;
    expect_dim(tf, ta.dim(), 2)?;
    let d = ta.dim();
    let lap: f64 = (0..d).map(|i| tf.d(&[i, i])).sum();
    let dot: f64 = (0..d).map(|i| ta.d(&[i]) * tf.d(&[i])).sum();
    let h2 = h * h;
    Ok(-a * (h2 * tf.value() + h2 * h2 / 12.0 * (lap - dot)))
}

// ---------------------------------------------------------------------------
// Sixth order in 2D, valid when `2 lap(ta) - |grad ta|^2` is constant.

fn tmul(a: &JetN, b: &JetN) -> JetN {
    let k = a.order().min(b.order());
    a.truncate(k)
        .mul(&b.truncate(k))
        .expect("jets share a center")
}

fn tlin(terms: &[(f64, &JetN)]) -> JetN {
    let k = terms
        .iter()
        .map(|(_, j)| j.order())
        .min()
        .expect("nonempty");
    let mut acc = terms[0].1.truncate(k).scale(terms[0].0);
    for (c, j) in &terms[1..] {
        acc = acc
            .add(&j.truncate(k).scale(*c))
            .expect("jets share a center");
    }
    acc
}

/// Jets of the auxiliary combinations `eta_1 .. eta_4` built from `ta`.
struct Etas {
    e1: JetN,
    e2: JetN,
    e3: JetN,
    e4: JetN,
}

fn etas(ta: &JetN) -> Result<Etas> {
    let tx = ta.derivative(0)?;
    let ty = ta.derivative(1)?;
    let txx = tx.derivative(0)?;
    let txy = tx.derivative(1)?;
    let tyy = ty.derivative(1)?;
    let tx2 = tmul(&tx, &tx);
    let ty2 = tmul(&ty, &ty);
    let e1 = tlin(&[(2.0, &txx), (-1.0, &tx2)]);
    let e2 = tlin(&[(2.0, &tyy), (-1.0, &ty2)]);
    let e3 = tlin(&[(2.0, &txy), (-1.0, &tmul(&tx, &ty))]);
    let e4 = tlin(&[(1.0, &txx), (1.0, &tyy), (7.0, &tx2), (7.0, &ty2)]);
    Ok(Etas { e1, e2, e3, e4 })
}

/// Sixth-order link coefficient and its antisymmetric part.
///
/// Returns `(a Phi, a tilde-Phi)` for the offset class of `p`, evaluated
/// from `a` and a jet of `ta` of order >= 5 at the midpoint. `tilde-Phi`
/// vanishes when `2 lap(ta) - |grad ta|^2` is constant.
pub fn o6_2d_link_parts(a: f64, ta: &JetN, p: &[i8], h: f64) -> Result<(f64, f64)> {
    expect_dim(ta, 2, 5)?;
    let t = |axes: &[usize]| ta.d(axes);
    let (gx, gy) = (t(&[0]), t(&[1]));
    let (txx, txy, tyy) = (t(&[0, 0]), t(&[0, 1]), t(&[1, 1]));
    let grad2 = gx * gx + gy * gy;
    let lap = txx + tyy;
    let h2 = h * h;
    let h4 = h2 * h2;
    let et = etas(ta)?;
    let s12 = tlin(&[(1.0, &et.e1), (1.0, &et.e2)]);
    let q = canonical(p);
    let (phi, tilde) = match (q[0], q[1]) {
        (1, 0) | (0, 1) => {
            let horizontal = q[0] == 1;
            let grad_lap =
                gx * (t(&[0, 0, 0]) + t(&[0, 1, 1])) + gy * (t(&[0, 0, 1]) + t(&[1, 1, 1]));
            let bilap = t(&[0, 0, 0, 0]) + 2.0 * t(&[0, 0, 1, 1]) + t(&[1, 1, 1, 1]);
            let e5 = txx - tyy;
            let lap_e5 = t(&[0, 0, 0, 0]) - t(&[1, 1, 1, 1]);
            let grad_e5 =
                gx * (t(&[0, 0, 0]) - t(&[0, 1, 1])) + gy * (t(&[0, 0, 1]) - t(&[1, 1, 1]));
            let common = -8.0 * grad2 * grad2 + 26.0 * grad_lap - 16.0 * bilap
                + 14.0 * lap * lap
                + 7.0 * grad2 * lap
                + 10.0 * t(&[0, 0, 1, 1])
                - 22.0 * txx * tyy
                - 8.0 * txy * txy;
            let odd = 5.0 * lap * e5 + 7.0 * lap_e5 - 11.0 * grad2 * e5 - 2.0 * grad_e5;
            let s = s12.value();
            let (own, sign, axis) = if horizontal {
                (txx, 1.0, 0)
            } else {
                (tyy, -1.0, 1)
            };
            let phi =
                -4.0 + h2 * (-11.0 / 60.0 * s + own / 2.0) + h4 / 960.0 * (common + sign * odd);
            let d1 = s12.d(&[axis]);
            let d3 = s12.d(&[axis, axis, axis]);
            let tilde = h2 * h / 40.0 * d1 + h4 * h / 960.0 * (d3 - 3.0 * own * d1);
            (phi, tilde)
        }
        (1, 1) | (1, -1) => {
            let e4 = et.e4.value();
            let mixed = 4.0 * s12.d(&[0, 1]) + et.e4.d(&[0, 1]) - 3.0 * txy * e4;
            let sign = if q[1] == 1 { 1.0 } else { -1.0 };
            let phi = -1.0 + h2 * (e4 / 120.0 + sign * txy / 4.0) + sign * h4 / 1440.0 * mixed;
            (phi, 0.0)
        }
        _ => return Err(bad_offset(p)),
    };
    Ok((a * phi, a * tilde))
}

/// Largest admissible magnitude of the dropped antisymmetric part.
pub const O6_ANTISYMMETRIC_TOLERANCE: f64 = 1e-10;

/// Sixth-order link coefficient. Fails if the antisymmetric part is not
/// negligible, which happens when the constancy condition on `a` fails.
pub fn o6_2d_link(a: f64, ta: &JetN, p: &[i8], h: f64) -> Result<f64> {
    let (sym, anti) = o6_2d_link_parts(a, ta, p, h)?;
    if anti.abs() > O6_ANTISYMMETRIC_TOLERANCE * (1.0 + sym.abs()) {
        return Err(Error::Validation(format!(
            "antisymmetric part {anti:e} of the sixth-order link at {:?} is not negligible",
            ta.center()
        )));
    }
    Ok(sym)
}

/// Sixth-order right-hand side from `a`, and jets of `ta` and `tf` of order >= 4.
pub fn o6_2d_rhs(a: f64, ta: &JetN, tf: &JetN, h: f64) -> Result<f64> {
    expect_dim(ta, 2, 4)?;
    expect_dim(tf, 2, 4)?;
    let g = |axes: &[usize]| tf.d(axes);
    let (tx, ty) = (ta.d(&[0]), ta.d(&[1]));
    let et = etas(&ta.truncate(4))?;
    let (e1, e2, e3) = (et.e1.value(), et.e2.value(), et.e3.value());
    let diff = tlin(&[(1.0, &et.e1), (-1.0, &et.e2)]);
    let wx = tlin(&[(2.0, &et.e1), (1.0, &et.e2)]);
    let wy = tlin(&[(1.0, &et.e1), (2.0, &et.e2)]);
    let f0 = g(&[]);
    let (fx, fy) = (g(&[0]), g(&[1]));
    let (fxx, fxy, fyy) = (g(&[0, 0]), g(&[0, 1]), g(&[1, 1]));
    let second = fxx + fyy - tx * fx - ty * fy + (e1 + e2) * f0 / 10.0;
    let mut third = -4.0 * (g(&[0, 0, 0, 0]) + 4.0 * g(&[0, 0, 1, 1]) + g(&[1, 1, 1, 1]));
    third += 8.0
        * (tx * g(&[0, 0, 0])
            + 2.0 * ty * g(&[0, 0, 1])
            + 2.0 * tx * g(&[0, 1, 1])
            + ty * g(&[1, 1, 1]));
    third += (e1 - e2) * (fxx - fyy) + 16.0 * e3 * fxy;
    third += (tx * (3.0 * e1 + e2) - 2.0 * diff.d(&[0])) * fx;
    third += (ty * (e1 + 3.0 * e2) + 2.0 * diff.d(&[1])) * fy;
    third += (0.25 * (e1 * e1 + e2 * e2) + tx * wx.d(&[0]) + ty * wy.d(&[1])
        - wx.d(&[0, 0])
        - wy.d(&[1, 1]))
        * f0;
    let h2 = h * h;
    Ok(-a * (6.0 * h2 * f0 + h2 * h2 / 2.0 * second - h2 * h2 * h2 / 240.0 * third))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::JetSpace;

    fn const_jet(dim: usize, order: usize, v: f64) -> JetN {
        JetSpace::new(dim, order).constant(&alloc::vec![0.0; dim], v)
    }

    #[test]
    fn canonical_offsets() {
        assert_eq!(canonical(&[0, -1, 1]), alloc::vec![0, 1, -1]);
        assert_eq!(canonical(&[1, -1]), alloc::vec![1, -1]);
    }

    #[test]
    fn constant_coefficient_2d_o4() {
        let a = const_jet(2, 2, 1.0);
        let h = 0.1;
        assert_eq!(o4_2d_link(&a, &[1, 0], h).unwrap(), 2.0 / 3.0);
        assert_eq!(o4_2d_link(&a, &[-1, -1], h).unwrap(), 1.0 / 6.0);
        assert_eq!(o4_2d_link(&a, &[1, -1], h).unwrap(), 1.0 / 6.0);
    }

    #[test]
    fn constant_coefficient_3d_center() {
        let a = const_jet(3, 2, 1.0);
        let mut sum = 0.0;
        for p in crate::kdim::stencil_offsets(3, false) {
            if p.iter().any(|&x| x != 0) {
                let q: Vec<i8> = p.iter().map(|&x| x as i8).collect();
                sum += o4_3d_link(&a, &q, 0.1).unwrap();
            }
        }
        assert!((sum - 64.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn constant_coefficient_dd_2d() {
        let ta = const_jet(2, 2, 0.0);
        let h = 0.1;
        assert!((dd_o4_link(1.0, &ta, &[1, 0], h).unwrap() + 2.0 / 3.0).abs() < 1e-15);
        assert!((dd_o4_link(1.0, &ta, &[1, 1], h).unwrap() + 1.0 / 6.0).abs() < 1e-15);
        assert!((dd_o4_link(1.0, &ta, &[-1, 1], h).unwrap() + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn constant_coefficient_o6() {
        let ta = const_jet(2, 5, 0.0);
        let h = 0.1;
        assert_eq!(o6_2d_link(1.0, &ta, &[1, 0], h).unwrap(), -4.0);
        assert_eq!(o6_2d_link(1.0, &ta, &[0, -1], h).unwrap(), -4.0);
        assert_eq!(o6_2d_link(1.0, &ta, &[1, 1], h).unwrap(), -1.0);
        assert_eq!(o6_2d_link(1.0, &ta, &[1, -1], h).unwrap(), -1.0);
    }

    #[test]
    fn o6_rhs_for_constant_coefficient() {
        // tf = -f with f = x^4 + x^2 y^2 at the origin shifted to (0.5, 0.25).
        let sp = JetSpace::new(2, 4);
        let c = [0.5, 0.25];
        let x = sp.variable(&c, 0);
        let y = sp.variable(&c, 1);
        let f = x
            .unary(crate::jets::UnaryOp::PowInt(4))
            .unwrap()
            .add(&x.mul(&x).unwrap().mul(&y.mul(&y).unwrap()).unwrap())
            .unwrap();
        let tf = f.scale(-1.0);
        let ta = sp.constant(&c, 0.0);
        let h = 0.2;
        let got = o6_2d_rhs(1.0, &ta, &tf, h).unwrap();
        let lap = f.d(&[0, 0]) + f.d(&[1, 1]);
        let quartic = f.d(&[0, 0, 0, 0]) + 4.0 * f.d(&[0, 0, 1, 1]) + f.d(&[1, 1, 1, 1]);
        let want = 6.0 * h * h * f.value() + h.powi(4) / 2.0 * lap + h.powi(6) / 60.0 * quartic;
        assert!((got - want).abs() < 1e-15 * want.abs().max(1.0));
    }

    #[test]
    fn rejects_zero_offset() {
        let a = const_jet(2, 2, 1.0);
        assert!(matches!(o4_2d_link(&a, &[0, 0], 0.1), Err(Error::Usage(_))));
    }
}
