use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or inconsistent input.
    Validation,
    /// A size cap was exceeded or a solver stalled.
    Limit,
    /// A precondition of a decision procedure did not hold.
    Precondition,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("party {party}: {what} {value} is out of range 0..{limit}")]
    OutOfRange {
        party: usize,
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("expected {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },

    #[error("input block {block} (inputs {inputs:?}): entry {index} = {value} is negative")]
    NegativeEntry {
        block: usize,
        inputs: Vec<usize>,
        index: usize,
        value: f64,
    },

    #[error("input block {block} (inputs {inputs:?}): entry {index} = {value} exceeds 1")]
    EntryAboveOne {
        block: usize,
        inputs: Vec<usize>,
        index: usize,
        value: f64,
    },

    #[error("input block {block} (inputs {inputs:?}) sums to {sum}, not 1")]
    Normalization {
        block: usize,
        inputs: Vec<usize>,
        sum: f64,
    },

    #[error("non-finite value at position {index}")]
    NonFinite { index: usize },

    #[error("behaviors live on different scenarios")]
    ScenarioMismatch,

    #[error("mixture weights sum to {sum}, not 1")]
    WeightSum { sum: f64 },

    #[error("mixture weight {weight} at position {index} is negative")]
    NegativeWeight { index: usize, weight: f64 },

    #[error("invalid local model: {0}")]
    InvalidModel(String),

    #[error("stored local bound {stored} does not match recomputed bound {computed}")]
    BoundMismatch { stored: f64, computed: f64 },

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("{what}: count {count} exceeds cap {cap}{hint}")]
    TooLarge {
        what: &'static str,
        count: u128,
        cap: u128,
        hint: &'static str,
    },

    #[error("invalid quantum object: {0}")]
    Quantum(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("behavior is local; no violated inequality exists")]
    NoViolation,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(
        "membership undecided: LP reports infeasibility {infeasibility:e} but the best \
         functional only reaches violation {violation:e}"
    )]
    Undecided { infeasibility: f64, violation: f64 },

    #[error("degenerate functional: {0}")]
    DegenerateFunctional(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("document field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },

    #[error("document field `{field}`: {source}")]
    InField {
        field: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Lp(#[from] LpError),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::TooLarge { .. } | Error::Undecided { .. } => ErrorClass::Limit,
            Error::Lp(e) => match e {
                LpError::Stalled { .. } | LpError::TooLarge { .. } => ErrorClass::Limit,
                LpError::VerificationFailed(_) => ErrorClass::Limit,
                LpError::DimensionMismatch(_) | LpError::NonFinite => ErrorClass::Validation,
            },
            Error::NoViolation | Error::Precondition(_) => ErrorClass::Precondition,
            Error::InField { source, .. } => source.class(),
            _ => ErrorClass::Validation,
        }
    }
}
