use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distributions have different supports")]
    SupportMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("challenge {0} is not enrolled")]
    UnknownChallenge(String),

    #[error("CRT entry {0} does not exist")]
    UnknownEntry(u64),

    #[error("CRT entry {0} has already been consumed")]
    EntryConsumed(u64),

    #[error("no challenge survived pruning: {0}")]
    EmptySurvivorSet(String),

    #[error("requested {requested} rounds but only {available} live CRT entries remain")]
    NotEnoughEntries { requested: usize, available: usize },

    #[error("clone model {model} cannot be built from a {transcript} transcript")]
    ModelMismatch {
        model: &'static str,
        transcript: &'static str,
    },

    #[error("device kind does not match CRT kind")]
    DeviceMismatch,

    #[error("domain of {0} outcomes is too large to enumerate")]
    DomainTooLarge(usize),

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("unsupported CRT version {0}")]
    UnsupportedVersion(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
