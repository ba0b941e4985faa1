use thiserror::Error;

/// Errors raised by the solvers, models and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularMatrix { row: usize },

    #[error("nonlinear solve did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    /// A solver failure reported by a finished run, kept as text.
    #[error("solver failed: {0}")]
    SolverFailed(String),

    #[error("infeasible energy: kinetic term would be {radicand:e}")]
    InfeasibleEnergy { radicand: f64 },

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the root cause is a failed implicit solve.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::SingularMatrix { .. } | Error::SolverFailed(_) => true,
            Error::StepFailed { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
