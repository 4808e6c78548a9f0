use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A caller broke a documented precondition (bit widths, value ranges).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("index {index} out of range (valid: {valid})")]
    IndexOutOfRange { index: u64, valid: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two input keys hashed to the same 128-bit digest.
    #[error("duplicate key: digest {hi:016x}{lo:016x} occurs more than once")]
    DuplicateKey { hi: u64, lo: u64 },

    /// Structured decoding failure of a serialized blob.
    #[error("format error: {0}")]
    Format(String),

    /// The byte stream ended before a declared section was complete.
    #[error("truncated input: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    /// Construction gave up after the configured number of rehash attempts.
    #[error("construction failed after {attempts} attempts: {reason}")]
    ConstructionFailed { attempts: u32, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
