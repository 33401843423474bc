//! Problem data and the fields derived from it.
//!
//! A [`Problem`] holds the coefficient `a`, the source `f` and the Dirichlet
//! data `g` on the box `(l1, l2)^d`. For manufactured problems `f` is built
//! from an exact solution `u` as `f = -(grad a . grad u + a lap u)`, with the
//! jets of `a` and `u` taken two orders higher than requested.
//!
//! Several schemes are written in terms of `ta = -ln a` and `tf = -f / a`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::jets::{Jet1, JetN, JetSpace, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Given(Expression),
    /// `f` derived from the exact solution.
    Manufactured,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: String,
    pub dim: usize,
    pub l1: f64,
    pub l2: f64,
    pub a: Expression,
    pub source: Source,
    pub boundary: Expression,
    pub exact: Option<Expression>,
}

/// Names accepted by [`builtin_problem`].
pub const BUILTIN_PROBLEMS: [&str; 3] = ["example1", "example2", "example3"];

pub fn builtin_problem(name: &str) -> Result<Problem> {
    let (dim, l1, l2, a, u) = match name {
        "example1" => (1, 0.0, 1.0, "ln(3*x^3+5*x^2+4)", "4^(x^2+2*x+3)"),
        "example2" => (
            2,
            0.0,
            1.0,
            "4+cos(5*pi*tanh(5*x-3))+sin(17.5*tanh(4*y-2))",
            "exp(sin(20*ln(3*x^2+2*y^2+1)))*cos(20*y)",
        ),
        "example3" => (
            3,
            -1.0,
            1.0,
            "2+sin(5*x-3*y-3*z)",
            "cos(4*x)*sin(4*y)*cos(5*z)",
        ),
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    manufactured_problem(name, dim, l1, l2, a, u)
}

fn check_box(dim: usize, l1: f64, l2: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::Usage("dimension must be positive".into()));
    }
    if !(l1.is_finite() && l2.is_finite() && l1 < l2) {
        return Err(Error::Usage(format!("invalid interval ({l1}, {l2})")));
    }
    Ok(())
}

/// Problem with exact solution `u`; `f` and `g = u` follow from `a` and `u`.
pub fn manufactured_problem(
    name: &str,
    dim: usize,
    l1: f64,
    l2: f64,
    a: &str,
    u: &str,
) -> Result<Problem> {
    check_box(dim, l1, l2)?;
    let a = Expression::parse(a, dim)?;
    let u = Expression::parse(u, dim)?;
    Ok(Problem {
        name: name.to_string(),
        dim,
        l1,
        l2,
        a,
        source: Source::Manufactured,
        boundary: u.clone(),
        exact: Some(u),
    })
}

/// Problem with explicitly given `a`, `f` and `g`.
pub fn direct_problem(
    name: &str,
    dim: usize,
    l1: f64,
    l2: f64,
    a: &str,
    f: &str,
    g: &str,
) -> Result<Problem> {
    check_box(dim, l1, l2)?;
    Ok(Problem {
        name: name.to_string(),
        dim,
        l1,
        l2,
        a: Expression::parse(a, dim)?,
        source: Source::Given(Expression::parse(f, dim)?),
        boundary: Expression::parse(g, dim)?,
        exact: None,
    })
}

fn positive(point: &[f64], value: f64) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveCoefficient {
            point: point.to_vec(),
            value,
        })
    }
}

impl Problem {
    pub fn exact_value(&self, point: &[f64]) -> Result<Option<f64>> {
        self.exact.as_ref().map(|u| u.evaluate(point)).transpose()
    }

    pub fn boundary_value(&self, point: &[f64]) -> Result<f64> {
        self.boundary.evaluate(point)
    }

    /// Univariate jets of `a` and `f` about `x` (dimension 1 only).
    pub fn jets1(&self, x: f64, order: usize) -> Result<(Jet1, Jet1)> {
        if self.dim != 1 {
            return Err(Error::Usage(
                "univariate jets need a one-dimensional problem".into(),
            ));
        }
        let a = self.a.jet1(x, order + 2)?;
        positive(&[x], a.value())?;
        let f = match &self.source {
            Source::Given(f) => f.jet1(x, order)?,
            Source::Manufactured => {
                let u = self
                    .exact
                    .as_ref()
                    .expect("manufactured problem")
                    .jet1(x, order + 2)?;
                let du = u.derivative()?;
                let ddu = du.derivative()?;
                let da = a.derivative()?.truncate(order);
                let flux = da
                    .mul(&du.truncate(order))?
                    .add(&a.truncate(order).mul(&ddu)?)?;
                flux.scale(-1.0)
            }
        };
        Ok((a.truncate(order), f))
    }
}

/// Evaluates jets of the problem fields at a fixed order.
///
/// Holds the jet tables so repeated evaluation does not rebuild them.
#[derive(Debug, Clone)]
pub struct FieldJets<'p> {
    problem: &'p Problem,
    space: JetSpace,
    high: JetSpace,
}

impl<'p> FieldJets<'p> {
    pub fn new(problem: &'p Problem, order: usize) -> Self {
        Self {
            problem,
            space: JetSpace::new(problem.dim, order),
            high: JetSpace::new(problem.dim, order + 2),
        }
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn order(&self) -> usize {
        self.space.order()
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    /// Jet of `a`; fails if `a` is not positive at the point.
    pub fn a(&self, point: &[f64]) -> Result<JetN> {
        let a = self.problem.a.jet(&self.space, point)?;
        positive(point, a.value())?;
        Ok(a)
    }

    pub fn f(&self, point: &[f64]) -> Result<JetN> {
        match &self.problem.source {
            Source::Given(f) => f.jet(&self.space, point),
            Source::Manufactured => self.manufactured_f(point),
        }
    }

    fn manufactured_f(&self, point: &[f64]) -> Result<JetN> {
        let k = self.order();
        let u = self.problem.exact.as_ref().expect("manufactured problem");
        let u = u.jet(&self.high, point)?;
        let a = self.problem.a.jet(&self.high, point)?;
        positive(point, a.value())?;
        let mut sum = self.space.constant(point, 0.0);
        let a_k = a.truncate(k);
        for i in 0..self.problem.dim {
            let ui = u.derivative(i)?;
            let ai = a.derivative(i)?.truncate(k);
            let uii = ui.derivative(i)?;
            sum = sum.add(&ai.mul(&ui.truncate(k))?)?.add(&a_k.mul(&uii)?)?;
        }
        Ok(sum.scale(-1.0))
    }

    pub fn derived(&self, point: &[f64]) -> Result<DerivedFields> {
        let a = self.a(point)?;
        let f = self.f(point)?;
        derived_fields(&a, &f)
    }
}

/// `ta = -ln a` and `tf = -f / a` as jets, plus the value of `a`.
#[derive(Debug, Clone)]
pub struct DerivedFields {
    pub a: f64,
    pub ta: JetN,
    pub tf: JetN,
}

pub fn derived_fields(a: &JetN, f: &JetN) -> Result<DerivedFields> {
    positive(a.center(), a.value())?;
    Ok(DerivedFields {
        a: a.value(),
        ta: a.unary(UnaryOp::Ln)?.scale(-1.0),
        tf: f.div(a)?.scale(-1.0),
    })
}

/// `2 lap(ta) - |grad ta|^2` from a jet of `ta` of order at least 2.
pub fn constancy_quantity(ta: &JetN) -> f64 {
    (0..ta.dim())
        .map(|i| {
            let g = ta.d(&[i]);
            2.0 * ta.d(&[i, i]) - g * g
        })
        .sum()
}

/// Gradient of a jet at its center.
pub fn gradient(j: &JetN) -> Vec<f64> {
    (0..j.dim()).map(|i| j.d(&[i])).collect()
}

/// Laplacian of a jet at its center.
pub fn laplacian(j: &JetN) -> f64 {
    (0..j.dim()).map(|i| j.d(&[i, i])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unknown_problem() {
        assert!(matches!(
            builtin_problem("example4"),
            Err(Error::UnknownProblem(_))
        ));
        for name in BUILTIN_PROBLEMS {
            let p = builtin_problem(name).unwrap();
            assert_eq!(p.name, name);
        }
    }

    #[test]
    fn manufactured_source_at_origin() {
        let p = manufactured_problem("t", 2, 0.0, 1.0, "exp(x+y)", "x").unwrap();
        let fj = FieldJets::new(&p, 0);
        let f = fj.f(&[0.0, 0.0]).unwrap();
        assert!((f.value() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn manufactured_source_one_dimensional_agrees() {
        let p = builtin_problem("example1").unwrap();
        let (_, f1) = p.jets1(0.3, 3).unwrap();
        let fj = FieldJets::new(&p, 3);
        let fn_ = fj.f(&[0.3]).unwrap();
        for k in 0..=3u8 {
            let a = f1.partial(k as usize).unwrap();
            let b = fn_.partial(&[k]).unwrap();
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{k}: {a} {b}");
        }
    }

    #[test]
    fn non_positive_coefficient_is_rejected() {
        let p = manufactured_problem("t", 1, 0.0, 1.0, "x-0.5", "x").unwrap();
        let fj = FieldJets::new(&p, 1);
        assert!(matches!(
            fj.a(&[0.25]),
            Err(Error::NonPositiveCoefficient { .. })
        ));
    }

    proptest! {
        // 2 lap(ta) - |grad ta|^2 = |grad a|^2 / a^2 - 2 lap(a) / a
        #[test]
        fn derived_identity(x in -0.9f64..0.9, y in -0.9f64..0.9) {
            let p = manufactured_problem(
                "t", 2, -1.0, 1.0, "2+sin(3*x)*cos(2*y)+x*y", "x",
            ).unwrap();
            let fj = FieldJets::new(&p, 2);
            let a = fj.a(&[x, y]).unwrap();
            let d = fj.derived(&[x, y]).unwrap();
            let lhs = constancy_quantity(&d.ta);
            let g = gradient(&a);
            let av = a.value();
            let rhs = (g[0] * g[0] + g[1] * g[1]) / (av * av) - 2.0 * laplacian(&a) / av;
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
