use thiserror::Error;

/// Errors surfaced by the library. Variants map one-to-one onto the stable
/// machine-readable codes emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields: {0} vs {1}")]
    FieldMismatch(String, String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("matrix is singular")]
    Singular,
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),
    #[error("characteristic polynomial does not split over the field; irreducible factor {0}")]
    FieldNotSplitting(String),
    #[error("algebra is not closed under multiplication; witness product of spanning elements {0} and {1}")]
    NotClosed(usize, usize),
    #[error("algebra is not basic: strip {0} has size {1}")]
    NotBasic(usize, usize),
    #[error("sizes are not a step-sequence: strips {0} and {1} are equivalent but have sizes {2} and {3}")]
    NotStepSequence(usize, usize, usize, usize),
    #[error("generator {0} is not nilpotent upper triangular")]
    NotNilpotent(usize),
    #[error("generator {0} does not link a single class pair")]
    NotLinking(usize),
    #[error("poset indexing violated: p{0} < p{1} but {0} >= {1}")]
    BadIndexing(usize, usize),
    #[error("space is not invariant: {0}")]
    NotInvariant(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("matrix is not canonical: box {box_index} violates condition ({condition})")]
    NotCanonical { box_index: usize, condition: char },
    #[error("matrix is not canonical: {0}")]
    NotCanonicalInput(String),
    #[error("exhaustive search requires a prime field")]
    PrimeFieldRequired,
    #[error("enumeration budget exceeded: {0} > {1}")]
    BudgetExceeded(u128, u128),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable error code used in CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DivisionByZero => "DIVISION_BY_ZERO",
            Error::FieldMismatch(..) => "FIELD_MISMATCH",
            Error::NotPrime(_) => "NOT_PRIME",
            Error::Singular => "SINGULAR",
            Error::SizeMismatch(_) => "SIZE_MISMATCH",
            Error::PartitionMismatch(_) => "PARTITION_MISMATCH",
            Error::FieldNotSplitting(_) => "FIELD_NOT_SPLITTING",
            Error::NotClosed(..) => "NOT_CLOSED",
            Error::NotBasic(..) => "NOT_BASIC",
            Error::NotStepSequence(..) => "NOT_STEP_SEQUENCE",
            Error::NotNilpotent(_) => "NOT_NILPOTENT",
            Error::NotLinking(_) => "NOT_LINKING",
            Error::BadIndexing(..) => "BAD_INDEXING",
            Error::NotInvariant(_) => "NOT_INVARIANT",
            Error::InternalInconsistency(_) => "INTERNAL_INCONSISTENCY",
            Error::NotCanonical { .. } => "NOT_CANONICAL",
            Error::NotCanonicalInput(_) => "NOT_CANONICAL",
            Error::PrimeFieldRequired => "PRIME_FIELD_REQUIRED",
            Error::BudgetExceeded(..) => "BUDGET_EXCEEDED",
            Error::Parse(_) => "PARSE",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
