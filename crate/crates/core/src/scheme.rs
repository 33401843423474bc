//! Scheme selection and pointwise evaluation of link coefficients and
//! right-hand sides.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::fields::{constancy_quantity, FieldJets, Problem};
use crate::jets::{JetN, UnaryOp};
use crate::stencil1d::{link_coefficient, Stencil1D};
use crate::stencil_nd::{self, canonical, StencilInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Three-point scheme of even order `M` in 1D.
    OneD(usize),
    TwoDO4,
    TwoDO6,
    ThreeDO4,
    /// Fourth order in any dimension.
    AnyDO4,
}

impl Scheme {
    /// Parses `1d-oM`, `2d-o4`, `2d-o6`, `3d-o4` or `dd-o4`.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "2d-o4" => return Ok(Scheme::TwoDO4),
            "2d-o6" => return Ok(Scheme::TwoDO6),
            "3d-o4" => return Ok(Scheme::ThreeDO4),
            "dd-o4" => return Ok(Scheme::AnyDO4),
            _ => {}
        }
        if let Some(m) = name
            .strip_prefix("1d-o")
            .and_then(|m| m.parse::<usize>().ok())
        {
            if (2..=12).contains(&m) && m % 2 == 0 {
                return Ok(Scheme::OneD(m));
            }
        }
        Err(Error::Usage(format!(
            "unknown scheme `{name}` (expected 1d-o2 .. 1d-o12, 2d-o4, 2d-o6, 3d-o4 or dd-o4)"
        )))
    }

    pub fn name(&self) -> String {
        match self {
            Scheme::OneD(m) => format!("1d-o{m}"),
            Scheme::TwoDO4 => "2d-o4".into(),
            Scheme::TwoDO6 => "2d-o6".into(),
            Scheme::ThreeDO4 => "3d-o4".into(),
            Scheme::AnyDO4 => "dd-o4".into(),
        }
    }

    /// Consistency order `M`.
    pub fn order(&self) -> usize {
        match self {
            Scheme::OneD(m) => *m,
            Scheme::TwoDO6 => 6,
            _ => 4,
        }
    }

    /// Sign `s` such that `A = s C` is positive definite.
    pub fn orientation(&self) -> f64 {
        match self {
            Scheme::OneD(_) | Scheme::TwoDO4 | Scheme::ThreeDO4 => -1.0,
            Scheme::TwoDO6 | Scheme::AnyDO4 => 1.0,
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        let ok = match self {
            Scheme::OneD(_) => dim == 1,
            Scheme::TwoDO4 | Scheme::TwoDO6 => dim == 2,
            Scheme::ThreeDO4 => dim == 3,
            Scheme::AnyDO4 => dim >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "scheme {} does not apply to a {dim}-dimensional problem",
                self.name()
            )))
        }
    }

    /// Orders of the jets needed at link midpoints and at nodes.
    fn jet_orders(&self) -> (usize, usize) {
        match self {
            Scheme::OneD(m) => (m + 1, m - 1),
            Scheme::TwoDO4 | Scheme::ThreeDO4 | Scheme::AnyDO4 => (2, 2),
            Scheme::TwoDO6 => (5, 4),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Evaluates a scheme's coefficients for one problem and grid spacing.
#[derive(Debug, Clone)]
pub struct SchemeEvaluator<'p> {
    scheme: Scheme,
    problem: &'p Problem,
    h: f64,
    link_jets: FieldJets<'p>,
    node_jets: FieldJets<'p>,
}

fn neg_ln(a: &JetN) -> Result<JetN> {
    Ok(a.unary(UnaryOp::Ln)?.scale(-1.0))
}

impl<'p> SchemeEvaluator<'p> {
    pub fn new(scheme: Scheme, problem: &'p Problem, h: f64) -> Result<Self> {
        scheme.check_dim(problem.dim)?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Usage(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        let (lo, no) = scheme.jet_orders();
        Ok(Self {
            scheme,
            problem,
            h,
            link_jets: FieldJets::new(problem, lo),
            node_jets: FieldJets::new(problem, no),
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `C_p` for the link with offset `p` whose midpoint is `mid`.
    pub fn link(&self, p: &[i8], mid: &[f64]) -> Result<f64> {
        let h = self.h;
        match self.scheme {
            Scheme::OneD(m) => {
                let a = self.problem.a.jet1(mid[0], m + 1)?;
                if a.value() <= 0.0 {
                    return Err(Error::NonPositiveCoefficient {
                        point: mid.to_vec(),
                        value: a.value(),
                    });
                }
                link_coefficient(&a, m, h)
            }
            Scheme::TwoDO4 => stencil_nd::o4_2d_link(&self.link_jets.a(mid)?, p, h),
            Scheme::ThreeDO4 => stencil_nd::o4_3d_link(&self.link_jets.a(mid)?, p, h),
            Scheme::AnyDO4 => {
                if p.iter().filter(|&&x| x != 0).count() > 2 {
                    return Ok(0.0);
                }
                let a = self.link_jets.a(mid)?;
                stencil_nd::dd_o4_link(a.value(), &neg_ln(&a)?, p, h)
            }
            Scheme::TwoDO6 => {
                let a = self.link_jets.a(mid)?;
                stencil_nd::o6_2d_link(a.value(), &neg_ln(&a)?, p, h)
            }
        }
    }

    /// True if the link with offset `p` can be nonzero.
    pub fn link_is_structural(&self, p: &[i8]) -> bool {
        match self.scheme {
            Scheme::AnyDO4 => p.iter().filter(|&&x| x != 0).count() <= 2,
            _ => true,
        }
    }

    /// `f_h` at the node `center`.
    pub fn rhs(&self, center: &[f64]) -> Result<f64> {
        let h = self.h;
        match self.scheme {
            Scheme::OneD(m) => {
                let c = center[0];
                let am = self.problem.a.jet1(c - h / 2.0, m + 1)?;
                let ap = self.problem.a.jet1(c + h / 2.0, m + 1)?;
                let (_, f) = self.problem.jets1(c, m - 1)?;
                Stencil1D::new(c, h, m, &am, &ap)?.rhs(&f)
            }
            Scheme::TwoDO4 | Scheme::ThreeDO4 => {
                let a = self.node_jets.a(center)?;
                let f = self.node_jets.f(center)?;
                stencil_nd::o4_rhs(&a, &f, h)
            }
            Scheme::AnyDO4 => {
                let d = self.node_jets.derived(center)?;
                stencil_nd::dd_o4_rhs(d.a, &d.ta, &d.tf, h)
            }
            Scheme::TwoDO6 => {
                let d = self.node_jets.derived(center)?;
                stencil_nd::o6_2d_rhs(d.a, &d.ta, &d.tf, h)
            }
        }
    }

    /// The full stencil at `center`, with `C_0` the negated sum of the others.
    pub fn stencil(&self, center: &[f64]) -> Result<StencilInstance> {
        let dim = center.len();
        let mut coefficients = Vec::with_capacity(3usize.pow(dim as u32));
        let mut sum = 0.0;
        let mut mid = vec![0.0; dim];
        for p in offsets(dim) {
            if p.iter().all(|&x| x == 0) {
                coefficients.push((p, 0.0));
                continue;
            }
            let c = if self.link_is_structural(&p) {
                for k in 0..dim {
                    mid[k] = center[k] + p[k] as f64 * self.h / 2.0;
                }
                self.link(&canonical(&p), &mid)?
            } else {
                0.0
            };
            sum += c;
            coefficients.push((p, c));
        }
        for (p, c) in coefficients.iter_mut() {
            if p.iter().all(|&x| x == 0) {
                *c = -sum;
            }
        }
        Ok(StencilInstance {
            center: center.to_vec(),
            h: self.h,
            coefficients,
            rhs: self.rhs(center)?,
        })
    }

    /// Checks scheme preconditions on a set of points. For the sixth-order
    /// scheme this is the constancy of `2 lap(ta) - |grad ta|^2`.
    pub fn validate_points(&self, points: &mut dyn Iterator<Item = Vec<f64>>) -> Result<()> {
        if self.scheme != Scheme::TwoDO6 {
            return Ok(());
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in points {
            let a = self.link_jets.a(&x)?.truncate(2);
            let q = constancy_quantity(&neg_ln(&a)?);
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if lo > hi {
            return Ok(());
        }
        let tolerance = CONSTANCY_TOLERANCE * (1.0 + lo.abs().max(hi.abs()));
        if hi - lo > tolerance {
            return Err(Error::ConstancyGate {
                spread: hi - lo,
                min: lo,
                max: hi,
                tolerance,
            });
        }
        Ok(())
    }
}

/// Relative tolerance of the constancy check for the sixth-order scheme.
pub const CONSTANCY_TOLERANCE: f64 = 1e-8;

/// All offsets in `{-1,0,1}^dim`, first axis varying fastest.
pub fn offsets(dim: usize) -> Vec<Vec<i8>> {
    let total = 3usize.pow(dim as u32);
    (0..total)
        .map(|mut code| {
            (0..dim)
                .map(|_| {
                    let digit = (code % 3) as i8 - 1;
                    code /= 3;
                    digit
                })
                .collect()
        })
        .collect()
}
