use thiserror::Error;

/// Errors raised by model validation and the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse model document: {0}")]
    Parse(String),

    #[error("pmf for hypothesis {hypothesis}, control {control:?} sums to {sum} (tolerance 1e-12)")]
    RowSum {
        hypothesis: usize,
        control: String,
        sum: f64,
    },

    #[error("support mismatch under control {control:?}: hypotheses {first} and {second} differ in their zero pattern")]
    SupportMismatch {
        control: String,
        first: usize,
        second: usize,
    },

    #[error("duplicate {kind} label {label:?}")]
    DuplicateLabel { kind: &'static str, label: String },

    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("distributions do not share a support (symbol {0})")]
    SupportDiffers(usize),

    #[error("absolute continuity violated at symbol {0}: q(y) = 0 but p(y) > 0")]
    NotAbsolutelyContinuous(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("payoff matrix must have at least one row and one column")]
    EmptyMatrix,

    #[error("hypothesis index {index} out of range for {count} hypotheses")]
    InvalidHypothesis { index: usize, count: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
