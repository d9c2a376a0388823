//! Error taxonomy shared by the library and the command-line tool.
//!
//! Every failure mode carries enough context to be actionable from a log line.
//! [`Error::exit_code`] maps errors onto the process exit convention used by
//! the binary: 2 for data or configuration problems, 3 for numerical failures.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("event {index}: timestamp {time} does not strictly increase over previous {previous}")]
    NonMonotonicTime {
        index: usize,
        time: f64,
        previous: f64,
    },

    #[error("event {index}: type {found} out of range for {num_types} event types")]
    TypeOutOfRange {
        index: usize,
        found: usize,
        num_types: usize,
    },

    #[error("event {index}: timestamp {time} outside observation window [0, {horizon}]")]
    OutsideWindow {
        index: usize,
        time: f64,
        horizon: f64,
    },

    #[error("operation requires a nonempty event sequence")]
    EmptySequence,

    #[error("chain timestamps must be strictly increasing and precede the query time")]
    NonIncreasingChain,

    #[error("non-finite value encountered in {context}")]
    NumericOverflow { context: &'static str },

    #[error("loss evaluated to a non-finite value")]
    NonFiniteLoss,

    #[error("training diverged: loss non-finite for {epochs} consecutive epochs")]
    Diverged { epochs: usize },

    #[error("thinning bound violated at t={time}: total intensity {intensity} exceeds bound {bound}")]
    BoundViolation {
        time: f64,
        intensity: f64,
        bound: f64,
    },

    #[error("{what}: worst relative error {worst:e} exceeds tolerance {tolerance:e}")]
    ToleranceExceeded {
        what: &'static str,
        worst: f64,
        tolerance: f64,
    },

    #[error("checkpoint version {found} not supported (this build reads version {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("{context}: expected {expected} event types, found {found}")]
    TypeCountMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    /// Exit code for the command-line tool: 2 for data/configuration errors,
    /// 3 for numerical failures. Usage errors (code 1) are produced by the
    /// argument parser before any `Error` exists.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonMonotonicTime { .. }
            | Error::TypeOutOfRange { .. }
            | Error::OutsideWindow { .. }
            | Error::EmptySequence
            | Error::NonIncreasingChain
            | Error::VersionMismatch { .. }
            | Error::CorruptCheckpoint(_)
            | Error::TypeCountMismatch { .. }
            | Error::InvalidConfig(_)
            | Error::Io { .. }
            | Error::Parse { .. } => 2,
            Error::NumericOverflow { .. }
            | Error::NonFiniteLoss
            | Error::Diverged { .. }
            | Error::BoundViolation { .. }
            | Error::ToleranceExceeded { .. } => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}
