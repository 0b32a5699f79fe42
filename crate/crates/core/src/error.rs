use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("region error: {0}")]
    Region(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e}){hint}")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        hint: String,
    },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn region(msg: impl Into<String>) -> Self {
        Error::Region(msg.into())
    }
}
