use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("jet order {requested} exceeds configured maximum {max}")]
    JetOrder { requested: usize, max: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("spec file line {line}: {message}")]
    SpecFile { line: usize, message: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<crate::C64>,
    },

    #[error("point is not regular: the real Jacobian of (rho1, rho2) has rank < 2")]
    NotRegular,

    #[error("{0}")]
    JumpPoint(String),

    #[error("jump point is not transverse")]
    NotTransverse,

    #[error("gauge minor is singular in this frame; re-rotate the chart")]
    GaugeSingular,

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

impl Error {
    /// True for failures of iterative numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::Singular(_)
                | Error::NotRegular
                | Error::GaugeSingular
                | Error::NotTransverse
        )
    }
}
