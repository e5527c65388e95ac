use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("budget exceeded: {requested} evaluations requested, budget is {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    #[error("Newton solve diverged at target {target}: residual {residual:e} after {iterations} iterations")]
    NewtonDivergence {
        target: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("spectral radius estimates disagree: gelfand {gelfand}, eig {eig}, allowed {allowed:e}")]
    NotConverged {
        gelfand: f64,
        eig: f64,
        allowed: f64,
    },

    #[error("vector field is not exact: loop residual {residual:e} exceeds {tolerance:e}")]
    NotExact { residual: f64, tolerance: f64 },

    #[error("direction {0:?} is not an integer vector")]
    NotIntegral(Vec<f64>),

    #[error("decay window too noisy: {usable} usable points, need at least 5")]
    WindowTooNoisy { usable: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the `skewmix` binary and the C API.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidInput(_) => 2,
            Error::BudgetExceeded { .. } => 3,
            Error::NewtonDivergence { .. }
            | Error::NonConvergence { .. }
            | Error::NotConverged { .. }
            | Error::NotExact { .. }
            | Error::NotIntegral(_)
            | Error::WindowTooNoisy { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}

pub(crate) fn check_budget(requested: u128, budget: u128) -> Result<()> {
    if requested > budget {
        Err(Error::BudgetExceeded { requested, budget })
    } else {
        Ok(())
    }
}
