use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by how the command-line front end reports them:
/// parameter errors exit with code 2, data errors with 3 and unavailable
/// estimation methods with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric or structural parameter violates its domain constraints.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A probability table cannot be truncated to the requested tail mass.
    #[error("truncation failure: {0}")]
    Truncation(String),

    /// Fewer samples than an operation needs.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A singles mean is zero (or negative after correction), so the
    /// estimator denominators are undefined.
    #[error("zero mean singles in arm {arm}: {context}")]
    ZeroMeanSingles { arm: u8, context: String },

    /// Background subtraction left a non-positive signal mean.
    #[error("background dominates signal in arm {arm}: corrected mean {corrected_mean}")]
    BackgroundDominates { arm: u8, corrected_mean: f64 },

    /// A counts or background file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// The requested estimation method cannot run on the given input.
    #[error("method unavailable: {0}")]
    MethodUnavailable(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 parameter, 3 data, 4 method-unavailable.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Truncation(_) => 2,
            Error::InsufficientData(_)
            | Error::ZeroMeanSingles { .. }
            | Error::BackgroundDominates { .. }
            | Error::Parse { .. }
            | Error::Io(_) => 3,
            Error::MethodUnavailable(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
