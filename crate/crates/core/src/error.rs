use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fluid layer degenerate: minimum separation {min_separation:.3e}")]
    Geometry { min_separation: f64 },

    #[error("Dirichlet-Neumann series not converging (term norms {term_norms:?})")]
    SeriesDivergence { term_norms: Vec<f64> },

    #[error("{solver} did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    SolverNonConvergence {
        solver: String,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("step too stiff: dt fell to {dt:.3e} below dt_min {dt_min:.3e}")]
    Stiffness { dt: f64, dt_min: f64 },

    #[error("time step {dt:.3e} exceeds the explicit stability bound; use dt <= {suggested:.3e}")]
    StepTooLarge { dt: f64, suggested: f64 },

    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Geometry { .. }
                | Error::SeriesDivergence { .. }
                | Error::SolverNonConvergence { .. }
                | Error::Stiffness { .. }
                | Error::StepTooLarge { .. }
        )
    }
}
