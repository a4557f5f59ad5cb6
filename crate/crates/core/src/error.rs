use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss ({0})")]
    NonFiniteLoss(f64),

    #[error("training diverged at epoch {epoch}, step {step}: loss = {loss}")]
    Divergence { epoch: usize, step: usize, loss: f64 },

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("alphabet of {0} symbols exceeds the 65536-entry frequency table")]
    AlphabetTooLarge(usize),

    #[error("model hash mismatch: blob was written for {blob:#018x}, params hash to {params:#018x}")]
    ModelHashMismatch { blob: u64, params: u64 },

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error("truncated input: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("content hash mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Corruption { stored: u64, computed: u64 },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CorruptStream(_)
            | Error::AlphabetTooLarge(_)
            | Error::ModelHashMismatch { .. }
            | Error::Format { .. }
            | Error::Truncated { .. }
            | Error::Corruption { .. }
            | Error::UnsupportedVersion(_)
            | Error::Io(_) => 2,
            Error::NonFiniteLoss(_) | Error::Divergence { .. } => 3,
            Error::Dimension(_) | Error::Degenerate(_) | Error::InvalidArgument(_) => 4,
        }
    }
}
