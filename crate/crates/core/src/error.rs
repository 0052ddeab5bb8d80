use crate::structure::Elem;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("vocabulary mismatch: `{left}` vs `{right}`")]
    VocabularyMismatch { left: String, right: String },
    #[error("{what}: size {size} exceeds bound {bound}")]
    BoundExceeded {
        what: &'static str,
        size: usize,
        bound: usize,
    },
    #[error("element {0} is not in the universe")]
    NotSubset(Elem),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("no amalgam found within budget {budget}")]
    BudgetExhausted { budget: usize },
    #[error("defective age `{tag}`: {reason}")]
    DefectiveAge { tag: String, reason: String },
    #[error("element {0} has not been built yet")]
    RangeNotBuilt(Elem),
    #[error("notation comparison exhausted horizon {horizon}")]
    HorizonExceeded { horizon: usize },
    #[error("notation `{0}` is not a limit notation")]
    NotLimit(String),
    #[error("unknown fundamental sequence `{0}`")]
    UnknownSequence(String),
    #[error("fundamental sequence `{0}` is already registered")]
    DuplicateSequence(String),
    #[error("unknown age `{0}`")]
    UnknownAge(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
