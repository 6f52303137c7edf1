use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The implicit step did not reach the residual tolerance.
    #[error("implicit step failed to converge after {iterations} iterations (residual {residual:e}){}", location(*.step, *.path))]
    Convergence {
        residual: f64,
        iterations: usize,
        step: Option<i64>,
        path: Option<usize>,
    },

    #[error(
        "combined support of {size} points exceeds the cap of {cap}; subsample both measures \
         with `measures::subsample` using the run seed ({seed_hint}) and retry"
    )]
    SupportCap { size: usize, cap: usize, seed_hint: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn location(step: Option<i64>, path: Option<usize>) -> String {
    match (step, path) {
        (Some(s), Some(p)) => format!(" at step {s} of path {p}"),
        (Some(s), None) => format!(" at step {s}"),
        (None, Some(p)) => format!(" in path {p}"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach the path index to a convergence failure.
    pub(crate) fn in_path(self, index: usize) -> Self {
        match self {
            Error::Convergence {
                residual,
                iterations,
                step,
                ..
            } => Error::Convergence {
                residual,
                iterations,
                step,
                path: Some(index),
            },
            other => other,
        }
    }
}
