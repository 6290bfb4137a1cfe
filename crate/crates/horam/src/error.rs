//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    /// A bin received more real blocks than its capacity during oblivious
    /// placement. The caller resamples PRF keys and rebuilds.
    #[error("bin overflow during oblivious placement")]
    BinOverflow,

    /// Relaxed compaction hit a chunk whose marked count left the safe
    /// window. The caller reshuffles and retries or falls back to full
    /// compaction.
    #[error("chunk overflow during relaxed compaction")]
    CompactionOverflow,

    /// The oblivious matcher did not produce a left-perfect matching within
    /// its iteration budget. The caller resamples all PRF keys and rebuilds.
    #[error("matching incomplete after iteration budget")]
    MatchingIncomplete,

    /// A two-tier major bin deviated from its load tolerance.
    #[error("two-tier major bin load outside tolerance")]
    TierImbalance,

    /// No admissible sizing exists for the requested scheme.
    #[error("no admissible sizing: {0}")]
    Sizing(String),

    #[error("duplicate or out-of-range address in initial contents")]
    Init(String),

    #[error("map capacity exceeded")]
    Capacity,

    #[error("lookup of a key that was already looked up")]
    RecurrentLookup,

    #[error("i/o: {0}")]
    Io(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
