use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the core library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid ring descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("budget exceeded: {what} needs at least {required} but the budget is {budget}{hint}")]
    Budget {
        what: String,
        budget: u64,
        required: u64,
        hint: String,
    },

    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown variable `{token}` at {line}:{column}")]
    UnknownVariable {
        token: String,
        line: usize,
        column: usize,
    },

    #[error("unsupported ideal shape: {0}")]
    UnsupportedIdeal(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no lift guarantee: {0}")]
    NoLiftGuarantee(String),

    #[error("point does not lift: {0}")]
    LiftCounterexample(String),

    #[error("under-determined: {0}")]
    UnderDetermined(String),

    #[error("pro-cylinder cannot be realized at a finite level: {0}")]
    ProCylinder(String),

    #[error("dimension inconsistency: {0}")]
    DimensionInconsistency(String),

    #[error("divergent series: {0}")]
    Divergent(String),

    #[error("level too low: {message} (try level {suggested})")]
    LevelTooLow { message: String, suggested: u32 },

    #[error("unresolved at level {level}: {message}")]
    Unresolved { level: u32, message: String },

    #[error("refused: {0}")]
    Refused(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, budget: u64, required: u64) -> Self {
        Error::Budget {
            what: what.into(),
            budget,
            required,
            hint: String::new(),
        }
    }
}
