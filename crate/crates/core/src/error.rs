use thiserror::Error;

/// Errors raised by the solvers and estimators.
#[derive(Debug, Clone, Error)]
pub enum HjbError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Iterative solver gave up. `trace` holds the residual history.
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64, trace: Vec<f64> },

    #[error("root left the admissible branch: {0}")]
    Branch(String),

    #[error("singular or inconsistent linear system: {0}")]
    Singular(String),

    #[error("gradient overflow near r = {radius}: the data is too stiff for this mesh, refine it")]
    Stiff { radius: f64 },

    #[error("horizon truncation bias {bias:.3e} exceeds the budget {budget:.3e}; increase the horizon")]
    Truncation { bias: f64, budget: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, HjbError>;
