use thiserror::Error;

/// Errors surfaced by the library. The CLI maps `InvalidSpec` and
/// `InvalidArgument` to exit code 2 and the numerical variants to 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("cost guard: {0}")]
    CostGuard(String),

    #[error("quadrature reached only {achieved:e} (requested {requested:e})")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("no root with positive imaginary part for w = {re} + {im}i")]
    NoHerglotzRoot { re: f64, im: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by bad input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSpec(_) | Error::InvalidArgument(_) | Error::CostGuard(_) | Error::Json(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
