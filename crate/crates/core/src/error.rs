use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped by the exit code the CLI maps them to, see
/// [`Error::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // validation
    #[error("invalid argument: {0}")]
    Validation(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    // data
    #[error("{}:{line}: malformed record: {message}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("pair {pair} references unknown snippet `{id}`")]
    DanglingReference { pair: usize, id: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("unknown snippet `{0}`")]
    UnknownSnippet(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("sampling retained no functionality (cap {cap})")]
    NothingRetained { cap: usize },
    #[error("ragged vector dimensions: line {line} has {got}, expected {expected}")]
    RaggedDimension {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("all differences are zero")]
    AllZeroDifferences,
    #[error("no eligible in-context example: {0}")]
    NoEligibleExample(String),
    #[error("metrics undefined: {0}")]
    UndefinedMetrics(String),
    #[error("unsupported checkpoint: {0}")]
    Checkpoint(String),

    // transport
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    // divergence
    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 2 validation, 3 data, 4 transport,
    /// 5 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::DimensionMismatch { .. } => 2,
            Error::Transport { .. } => 4,
            Error::Divergence { .. } => 5,
            _ => 3,
        }
    }
}
