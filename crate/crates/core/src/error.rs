use std::path::PathBuf;

/// Errors produced by the discretization, jump solver and Stokes solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid operand: {0}")]
    InvalidOperand(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid too coarse to resolve the interface: {0}")]
    GridTooCoarse(String),

    #[error("interface reaches the boundary stencils: {0}")]
    InterfaceNearBoundary(String),

    #[error("geometry inconsistency: {0}")]
    Geometry(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("conjugate gradient did not converge in {iterations} iterations (last relative residual {last:.3e})")]
    SolverFailure {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
