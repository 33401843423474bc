//! Arbitrary even-order compact three-point schemes in one dimension.
//!
//! Expanding the solution of `-(a u')' = f` about a point `b` gives
//!
//! ```text
//! u(b+s) = u(b) + a(b) u'(b) sum_j E_j(b) s^j / j!  -  sum_l f^(l)(b) sum_j F_{j,l}(b) s^j / j!
//! ```
//!
//! with `E_{2,1} = -a'/a`, `E_{j+1,1} = E_{j,1}' - (a'/a) E_{j,1}`, `F_{2,0} = 1/a`,
//! `F_{j,-1} = E_{j,1}/a` and `F_{j+1,k} = F_{j,k}' + F_{j,k-1}` (zero for
//! `k > j-2`). Differencing the expansion across the two half-cells about
//! `c -/+ h/2` yields symmetric link coefficients
//!
//! ```text
//! C_{+-1} = 2 a(b) / S(b, h),   S = 2 + sum_{j odd} 2 E_{j,1}(b) (h/2)^(j-1) / j!,   b = c +- h/2
//! ```
//!
//! truncated to the even powers of `h` below `h^M`, and right-hand side
//! weights `d_l(h)` for `f^(l)(c)`, `l < M`.
//!
//! The operator orientation is `A = -C`, so `-(C_{-1} u_{-1} + C_0 u_0 + C_1 u_1)`
//! matches `-f_h` with `f_h = -h^2 f + O(h^3)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jets::Jet1;

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn check_order(order: usize) -> Result<()> {
    if order < 2 || !order.is_multiple_of(2) {
        return Err(Error::Usage(alloc::format!(
            "one-dimensional scheme order must be even and at least 2, got {order}"
        )));
    }
    Ok(())
}

/// Values of the expansion functions `E_{j,1}` and `F_{j,k}` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTables {
    order: usize,
    e: Vec<f64>,
    f: Vec<Vec<f64>>,
}

impl RecursionTables {
    /// Builds the tables for scheme order `M` from a jet of `a` of order `M + 1`.
    pub fn new(a: &Jet1, order: usize) -> Result<Self> {
        check_order(order)?;
        let m = order;
        if a.order() < m + 1 {
            return Err(Error::Usage(alloc::format!(
                "coefficient jet of order {} is too short for order-{m} tables",
                a.order()
            )));
        }
        if a.value() <= 0.0 {
            return Err(Error::NonPositiveCoefficient {
                point: vec![a.center()],
                value: a.value(),
            });
        }
        let a = a.truncate(m + 1);
        let a_m = a.truncate(m);
        let ratio = a.derivative()?.div(&a_m)?;
        // Jets of E_{j,1} and F_{j,k}; E_j has order M + 2 - j.
        let mut e_jets = vec![ratio.scale(-1.0)];
        let inv_a = a_m.recip()?;
        let mut f_row = vec![e_jets[0].mul(&inv_a)?, inv_a.clone()];
        let mut e = vec![e_jets[0].value()];
        let mut f = vec![f_row.iter().map(Jet1::value).collect::<Vec<_>>()];
        for j in 2..=m {
            let prev = e_jets.last().expect("nonempty");
            let lower = prev.order() - 1;
            let next = prev
                .derivative()?
                .sub(&ratio.truncate(lower).mul(&prev.truncate(lower))?)?;
            let mut row = Vec::with_capacity(f_row.len() + 1);
            row.push(next.mul(&inv_a.truncate(lower))?);
            for k in 0..=j - 1 {
                let deriv = if k + 1 < f_row.len() {
                    Some(f_row[k + 1].derivative()?)
                } else {
                    None
                };
                let shifted = f_row[k].truncate(lower);
                row.push(match deriv {
                    Some(d) => d.add(&shifted)?,
                    None => shifted,
                });
            }
            e.push(next.value());
            f.push(row.iter().map(Jet1::value).collect());
            e_jets.push(next);
            f_row = row;
        }
        Ok(Self { order, e, f })
    }

    /// `E_{j,1}` for `2 <= j <= M + 1`.
    pub fn e(&self, j: usize) -> f64 {
        self.e[j - 2]
    }

    /// `F_{j,k}` for `2 <= j <= M + 1` and `-1 <= k`; zero when `k > j - 2`.
    pub fn f(&self, j: usize, k: isize) -> f64 {
        let row = &self.f[j - 2];
        let idx = (k + 1) as usize;
        row.get(idx).copied().unwrap_or(0.0)
    }

    /// Even power series in `h` of the link coefficient, `2a / S(h)`,
    /// with degrees up to `M - 2`.
    pub fn link_series(&self, a: f64) -> Result<Vec<f64>> {
        let m = self.order;
        let mut s = vec![0.0; m - 1];
        s[0] = 2.0;
        for j in (3..m).step_by(2) {
            s[j - 1] = 2.0 * self.e(j) / (factorial(j) * libm::pow(2.0, (j - 1) as f64));
        }
        let s = Jet1::from_coeffs(0.0, s)?;
        Ok(s.recip()?.scale(2.0 * a).coeffs().to_vec())
    }

    /// `G_k(h)`: the odd-index sum of `F_{j,k}` weighted by powers of `h/2`.
    pub fn g(&self, k: usize, h: f64) -> f64 {
        let mut sum = 0.0;
        for j in k + 2..=self.order + 1 {
            if j % 2 == 1 {
                let p = (j - k - 2) as i32;
                sum += 2.0 * self.f(j, k as isize) / factorial(j) * libm::pow(h / 2.0, p as f64);
            }
        }
        sum
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * t + v)
}

/// Link coefficient at the midpoint `b` of a cell of width `h`.
pub fn link_coefficient(a: &Jet1, order: usize, h: f64) -> Result<f64> {
    let t = RecursionTables::new(a, order)?;
    Ok(horner(&t.link_series(a.value())?, h))
}

/// A three-point stencil centered at `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil1D {
    pub center: f64,
    pub h: f64,
    pub order: usize,
    pub c_minus: f64,
    pub c_zero: f64,
    pub c_plus: f64,
    /// `d_l(h)` for `l = 0 .. M-1`.
    pub weights: Vec<f64>,
}

impl Stencil1D {
    /// Builds the stencil from jets of `a` (order `M + 1`) at `c - h/2` and `c + h/2`.
    pub fn new(center: f64, h: f64, order: usize, a_minus: &Jet1, a_plus: &Jet1) -> Result<Self> {
        let tm = RecursionTables::new(a_minus, order)?;
        let tp = RecursionTables::new(a_plus, order)?;
        let c_minus = horner(&tm.link_series(a_minus.value())?, h);
        let c_plus = horner(&tp.link_series(a_plus.value())?, h);
        let weights = rhs_weights(&tm, &tp, c_minus, c_plus, order, h);
        Ok(Self {
            center,
            h,
            order,
            c_minus,
            c_zero: -(c_minus + c_plus),
            c_plus,
            weights,
        })
    }

    /// `f_h = sum_l d_l h^(l+2) f^(l)(c)` given a jet of `f` at the center.
    pub fn rhs(&self, f: &Jet1) -> Result<f64> {
        if f.order() + 1 < self.order {
            return Err(Error::Usage("source jet order too low".into()));
        }
        let mut sum = 0.0;
        for (l, d) in self.weights.iter().enumerate() {
            let fl = f.partial(l).expect("checked order");
            sum += d * libm::pow(self.h, (l + 2) as f64) * fl;
        }
        Ok(sum)
    }
}

/// The weights `d_l(h)`.
///
/// `G_k` enters with a negative sign: the `F` expansion solves `(a u')' = f`,
/// and our source term is for `-(a u')' = f`.
fn rhs_weights(
    tm: &RecursionTables,
    tp: &RecursionTables,
    c_minus: f64,
    c_plus: f64,
    order: usize,
    h: f64,
) -> Vec<f64> {
    let gm: Vec<f64> = (0..order).map(|k| tm.g(k, h)).collect();
    let gp: Vec<f64> = (0..order).map(|k| tp.g(k, h)).collect();
    (0..order)
        .map(|l| {
            let sign_l = if (l + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let mut d = 2.0 * (sign_l - 1.0) / factorial(l + 1);
            for k in 0..=l {
                let s = if (l - k + 1) % 2 == 0 { 1.0 } else { -1.0 };
                d -= (c_minus * s * gm[k] + c_plus * gp[k]) / factorial(l - k);
            }
            d / libm::pow(2.0, (l + 2) as f64)
        })
        .collect()
}

/// Coefficients `q_i` of the closed-form twelfth-order link coefficient, with
/// the derivative orders of `a` in each monomial. A monomial with `m` factors
/// is divided by `a^(m-1)`.
pub const CLOSED_FORM_TERMS: [(i64, i64, &[u8]); 82] = [
    (-1, 12, &[1, 1]),
    (1, 24, &[2]),
    (-1, 180, &[1, 1, 1, 1]),
    (17, 1440, &[2, 1, 1]),
    (-1, 720, &[2, 2]),
    (-1, 240, &[3, 1]),
    (1, 1920, &[4]),
    (-11, 15120, &[1, 1, 1, 1, 1, 1]),
    (23, 10080, &[2, 1, 1, 1, 1]),
    (-137, 80640, &[2, 2, 1, 1]),
    (11, 120960, &[2, 2, 2]),
    (-1, 1260, &[3, 1, 1, 1]),
    (31, 40320, &[3, 2, 1]),
    (-1, 16128, &[3, 3]),
    (31, 161280, &[4, 1, 1]),
    (-1, 20160, &[4, 2]),
    (-1, 26880, &[5, 1]),
    (1, 322560, &[6]),
    (-107, 907200, &[1, 1, 1, 1, 1, 1, 1, 1]),
    (887, 1814400, &[2, 1, 1, 1, 1, 1, 1]),
    (-377, 604800, &[2, 2, 1, 1, 1, 1]),
    (989, 4147200, &[2, 2, 2, 1, 1]),
    (-107, 14515200, &[2, 2, 2, 2]),
    (-17, 100800, &[3, 1, 1, 1, 1, 1]),
    (13, 37800, &[3, 2, 1, 1, 1]),
    (-193, 1612800, &[3, 2, 2, 1]),
    (-1, 22400, &[3, 3, 1, 1]),
    (5, 387072, &[3, 3, 2]),
    (101, 2419200, &[4, 1, 1, 1, 1]),
    (-197, 3225600, &[4, 2, 1, 1]),
    (17, 3225600, &[4, 2, 2]),
    (19, 1382400, &[4, 3, 1]),
    (-1, 2073600, &[4, 4]),
    (-1, 120960, &[5, 1, 1, 1]),
    (1, 129024, &[5, 2, 1]),
    (-1, 829440, &[5, 3]),
    (1, 774144, &[6, 1, 1]),
    (-1, 2903040, &[6, 2]),
    (-1, 5806080, &[7, 1]),
    (1, 92897280, &[8]),
    (-2549, 119750400, &[1, 1, 1, 1, 1, 1, 1, 1, 1, 1]),
    (26263, 239500800, &[2, 1, 1, 1, 1, 1, 1, 1, 1]),
    (-94043, 479001600, &[2, 2, 1, 1, 1, 1, 1, 1]),
    (67339, 479001600, &[2, 2, 2, 1, 1, 1, 1]),
    (-35971, 1094860800, &[2, 2, 2, 2, 1, 1]),
    (2549, 3832012800, &[2, 2, 2, 2, 2]),
    (-751, 19958400, &[3, 1, 1, 1, 1, 1, 1, 1]),
    (1319, 11404800, &[3, 2, 1, 1, 1, 1, 1]),
    (-1921, 19958400, &[3, 2, 2, 1, 1, 1]),
    (22313, 1277337600, &[3, 2, 2, 2, 1]),
    (-379, 22809600, &[3, 3, 1, 1, 1, 1]),
    (39, 1971200, &[3, 3, 2, 1, 1]),
    (-1087, 510935040, &[3, 3, 2, 2]),
    (-1, 887040, &[3, 3, 3, 1]),
    (37, 3942400, &[4, 1, 1, 1, 1, 1, 1]),
    (-541, 22809600, &[4, 2, 1, 1, 1, 1]),
    (7643, 567705600, &[4, 2, 2, 1, 1]),
    (-751, 1277337600, &[4, 2, 2, 2]),
    (521, 79833600, &[4, 3, 1, 1, 1]),
    (-5743, 1277337600, &[4, 3, 2, 1]),
    (83, 340623360, &[4, 3, 3]),
    (-17669, 30656102400, &[4, 4, 1, 1]),
    (101, 958003200, &[4, 4, 2]),
    (-299, 159667200, &[5, 1, 1, 1, 1, 1]),
    (601, 159667200, &[5, 2, 1, 1, 1]),
    (-1087, 851558400, &[5, 2, 2, 1]),
    (-29, 29937600, &[5, 3, 1, 1]),
    (59, 218972160, &[5, 3, 2]),
    (83, 567705600, &[5, 4, 1]),
    (-1, 162201600, &[5, 5]),
    (193, 638668800, &[6, 1, 1, 1, 1]),
    (-3349, 7664025600, &[6, 2, 1, 1]),
    (299, 7664025600, &[6, 2, 2]),
    (83, 851558400, &[6, 3, 1]),
    (-1, 141926400, &[6, 4]),
    (-1, 23950080, &[7, 1, 1, 1]),
    (59, 1532805120, &[7, 2, 1]),
    (-1, 170311680, &[7, 3]),
    (59, 12262440960, &[8, 1, 1]),
    (-1, 766402560, &[8, 2]),
    (-1, 2043740160, &[9, 1]),
    (1, 40874803200, &[10]),
];

/// The closed-form link coefficient `a + w_1 h^2 + ... ` at the point where
/// `a` (a jet of order at least `order - 2`) is expanded, keeping the powers
/// `h^(2k)` with `2k < order`.
pub fn closed_form_link(a: &Jet1, order: usize, h: f64) -> Result<f64> {
    check_order(order)?;
    if order > 12 {
        return Err(Error::Usage(
            "closed form is tabulated up to order 12".into(),
        ));
    }
    let needed = order - 2;
    let d: Vec<f64> = (0..=needed)
        .map(|k| {
            a.partial(k)
                .ok_or_else(|| Error::Usage("coefficient jet order too low".into()))
        })
        .collect::<Result<_>>()?;
    let a0 = d[0];
    let mut sum = a0;
    for (num, den, factors) in CLOSED_FORM_TERMS.iter() {
        let weight: usize = factors.iter().map(|&k| k as usize).sum();
        if weight > needed {
            continue;
        }
        let mono: f64 = factors.iter().map(|&k| d[k as usize]).product();
        let q = *num as f64 / *den as f64;
        sum += q * mono / libm::pow(a0, (factors.len() - 1) as f64) * libm::pow(h, weight as f64);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expression;

    #[test]
    fn constant_coefficient_weights() {
        // a = 1: u_{-1} - 2u_0 + u_1 = -h^2 f - h^4 f''/12 - 2 h^6 f''''/6! ...
        let a = Jet1::constant(0.0, 1.0, 7);
        let s = Stencil1D::new(0.0, 0.1, 6, &a, &a).unwrap();
        assert_eq!((s.c_minus, s.c_zero, s.c_plus), (1.0, -2.0, 1.0));
        let want = [-1.0, 0.0, -1.0 / 12.0, 0.0, -1.0 / 360.0, 0.0];
        for (got, w) in s.weights.iter().zip(want) {
            assert!((got - w).abs() < 1e-15, "{:?}", s.weights);
        }
    }

    #[test]
    fn table_entries_have_matching_weight() {
        let bounds = [(0, 2), (2, 7), (7, 18), (18, 40), (40, 82)];
        for (n, (lo, hi)) in bounds.iter().enumerate() {
            for t in &CLOSED_FORM_TERMS[*lo..*hi] {
                let w: usize = t.2.iter().map(|&k| k as usize).sum();
                assert_eq!(w, 2 * (n + 1));
            }
        }
    }

    #[test]
    fn first_correction_term() {
        // w_1 = -a'^2 / (12 a) + a'' / 24
        let a = Jet1::from_coeffs(0.0, vec![2.0, 3.0, 2.5]).unwrap();
        let h = 0.1;
        let got = closed_form_link(&a, 4, h).unwrap();
        let want = 2.0 + (-9.0 / 24.0 + 5.0 / 24.0) * h * h;
        assert!((got - want).abs() < 1e-15);
        let rec = link_coefficient(
            &Jet1::from_coeffs(0.0, vec![2.0, 3.0, 2.5, 0.0, 0.0, 0.0]).unwrap(),
            4,
            h,
        )
        .unwrap();
        assert!((rec - want).abs() < 1e-15);
    }

    #[test]
    fn recursion_matches_closed_form_series() {
        let e = Expression::parse("ln(3*x^3+5*x^2+4)", 1).unwrap();
        for &x in &[0.1, 0.45, 0.9] {
            let a = e.jet1(x, 13).unwrap();
            let t = RecursionTables::new(&a, 12).unwrap();
            let series = t.link_series(a.value()).unwrap();
            for &h in &[0.0, 0.05, 0.2] {
                let got = horner(&series, h);
                let want = closed_form_link(&a, 12, h).unwrap();
                assert!(
                    (got - want).abs() < 1e-12 * want.abs(),
                    "x={x} h={h}: {got} {want}"
                );
            }
        }
    }

    #[test]
    fn rejects_odd_orders() {
        let a = Jet1::constant(0.0, 1.0, 5);
        assert!(matches!(RecursionTables::new(&a, 3), Err(Error::Usage(_))));
    }
}
