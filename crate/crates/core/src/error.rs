//! Crate-wide error type.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::solver::SolveReport;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Caller passed structurally incompatible arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// Division by a vanishing constant term, or ln/sqrt outside its domain.
    #[error("singular jet operation: {0}")]
    Singularity(String),

    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable `{name}` at offset {offset} is out of range for dimension {dim}")]
    VariableOutOfRange {
        name: String,
        offset: usize,
        dim: usize,
    },

    #[error("domain error in `{subexpression}`: {message}")]
    Domain {
        subexpression: String,
        message: String,
    },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("coefficient a = {value} is not positive at {point:?}")]
    NonPositiveCoefficient { point: Vec<f64>, value: f64 },

    /// The sixth-order scheme needs `2 lap(ln a) + |grad ln a|^2` to be constant.
    #[error(
        "sixth-order scheme rejected: 2*lap(ta) - |grad ta|^2 (ta = -ln a) varies by {spread:e} \
         over the grid (min {min:e}, max {max:e}, tolerance {tolerance:e})"
    )]
    ConstancyGate {
        spread: f64,
        min: f64,
        max: f64,
        tolerance: f64,
    },

    #[error("operator is not positive definite: {0}")]
    DefinitenessViolation(String),

    #[error(
        "iterative solver did not converge: relative residual {:e} after {} iterations",
        .0.relative_residual, .0.iterations
    )]
    NotConverged(Box<SolveReport>),
}

impl Error {
    /// True when the error stems from invalid input rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Usage(_)
                | Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::VariableOutOfRange { .. }
                | Error::UnknownProblem(_)
        )
    }
}
