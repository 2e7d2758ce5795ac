use thiserror::Error;

/// Errors shared by the model layer and the analysis engines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An element or descriptor was handed to a model it does not belong to.
    #[error("value belongs to a different model family: {0}")]
    ModelMismatch(&'static str),
    /// A subgroup index was requested for a pair that is not nested.
    #[error("descriptors are not nested: {0}")]
    NotNested(String),
    /// A subgroup index was requested that is infinite.
    #[error("index is infinite: {0}")]
    InfiniteIndex(String),
    /// A coset enumeration would exceed the configured bound.
    #[error("enumeration too large: {size} cosets exceeds bound {bound}")]
    EnumerationTooLarge { size: u64, bound: u64 },
    /// The step budget for a search or iteration was exhausted.
    #[error("budget exhausted after {0} steps")]
    BudgetExhausted(u64),
    /// The requested operation is not supported by this model family.
    #[error("unsupported operation for this model: {0}")]
    Unsupported(String),
    /// A normal core turned out to be open, so a distality search is vacuous.
    #[error("the normal core of the compact subgroup is open; no proximal pair can exist")]
    CoreIsOpen,
    /// Malformed input (bad literal, bad parameters, inconsistent fixture data).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
