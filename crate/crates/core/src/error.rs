use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// `mu = 1` has no subordinator; the heat semigroup is used directly.
    #[error("degenerate density: mu = 1 bypasses subordination")]
    DegenerateDensity,

    #[error("accuracy error: {what} = {value:e} exceeds {bound:e}")]
    Accuracy {
        what: &'static str,
        value: f64,
        bound: f64,
    },

    #[error(
        "picard iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    Convergence { iterations: usize, residual: f64 },

    #[error("capability error: {0}")]
    Capability(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("positivity failure: {0}")]
    Positivity(String),

    #[error("fit quality error: {0}")]
    FitQuality(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
