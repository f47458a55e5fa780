use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A policy chose an arm outside `0..arms`.
    #[error(
        "protocol violation at round {round}: policy chose arm {arm} but only {arms} arms exist"
    )]
    ProtocolViolation {
        round: usize,
        arm: usize,
        arms: usize,
    },

    /// An item pushed into a private counter exceeded the declared sensitivity.
    #[error("sensitivity violation: item magnitude {magnitude} exceeds bound {bound}")]
    SensitivityViolation { magnitude: f64, bound: f64 },

    #[error("counter has no items; release is undefined at t = 0")]
    EmptyCounter,

    #[error("context dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("the model has no contexts")]
    MissingContexts,

    /// The requested regression coefficient cannot be tested because the
    /// design matrix is rank deficient.
    #[error("untestable coordinate {coord}: design has rank below {dim}")]
    UntestableCoordinate { coord: usize, dim: usize },

    #[error("internal invariant failure: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
