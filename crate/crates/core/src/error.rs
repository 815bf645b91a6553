use std::path::PathBuf;

/// Errors raised by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("insufficient CSI resolution: subband {subband} (subcarriers {start}..{end}) holds no CSI sample at decimation {decimation}")]
    InsufficientCsiResolution {
        subband: usize,
        start: usize,
        end: usize,
        decimation: usize,
    },

    #[error("degenerate zero-noise inversion: member channels are linearly dependent")]
    DegenerateInversion,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid MCS table: {0}")]
    McsTable(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
