use thiserror::Error;

/// Error type shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-facing configuration. Collects every violation found.
    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// Mathematical domain violation (e.g. singular WLF denominator).
    #[error("domain error: {0}")]
    Domain(String),

    /// Assembly produced an unusable system.
    #[error("assembly fault: {0}")]
    Assembly(String),

    /// A solver failed to converge or hit an iteration cap.
    #[error("solver failure: {0}")]
    Solver(String),

    /// Field query outside the mesh or an unknown probe.
    #[error("query error: {0}")]
    Query(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config<S: Into<String>>(msg: S) -> Self {
        Error::Config(vec![msg.into()])
    }
}

pub type Result<T> = std::result::Result<T, Error>;
