use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("query is not acyclic and no decomposition was supplied")]
    NotAcyclic,

    #[error("join result count overflows 64 bits")]
    Overflow,

    #[error("cannot sample {requested} tuples from an empty region")]
    EmptyRegion { requested: u64 },

    #[error("the join result is empty")]
    EmptyJoin,

    #[error("length scale is zero; use the zero-radius shortcut")]
    DegenerateScale,

    #[error("solver failed: {0}")]
    SolverFailure(String),

    #[error("materialization budget of {budget} tuples exceeded")]
    BudgetExceeded { budget: usize },

    #[error("bag {bag} exceeds the materialization budget of {budget} tuples")]
    BagTooLarge { bag: usize, budget: usize },

    #[error("decomposition rejected: {0}")]
    GhdViolation(String),

    #[error("enumeration of {subsets} center subsets exceeds the limit of {limit}")]
    EnumerationLimit { subsets: u128, limit: u64 },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
