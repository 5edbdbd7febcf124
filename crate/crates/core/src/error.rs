use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The order-1 map is only defined on positive integers.
    #[error("the Collatz map is undefined at zero")]
    ZeroInput,

    #[error("structural order must be at least 1")]
    ZeroOrder,

    #[error("order {0} is beyond what an exhaustive residue sweep can address")]
    OrderTooLarge(u32),

    #[error("order {order} needs {entries} table entries, over the budget of {limit}")]
    BudgetExceeded {
        order: u32,
        entries: u64,
        limit: u64,
    },

    #[error("branch b={b} of order {order} produced a non-integral image")]
    NonIntegral { order: u32, b: u64 },

    #[error("checkpoint {}: {message}", path.display())]
    Checkpoint { path: PathBuf, message: String },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
