use thiserror::Error;

/// Crate-wide error type. Validation reports (witness / multicut violations)
/// are data, not errors; see the respective modules.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-productive: {0}")]
    NonProductive(String),
    #[error("not a regular tree (thunk encountered)")]
    NotRegular,
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unbound back edge {0}")]
    UnboundBackEdge(String),
    #[error("unguarded cycle through {0}")]
    Unguarded(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("bad path {0:?}")]
    BadPath(Vec<usize>),
    #[error("zero step {0} not applicable")]
    StepNotApplicable(String),
    #[error("target ordinal {1} not at least {0}")]
    OrdinalNotLarger(String, String),
    #[error("segment ordinal {0} not below {1}")]
    OrdinalViolation(String, String),
    #[error("endpoint mismatch: {0}")]
    EndpointMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("missing witness for variable {0}")]
    MissingVariableWitness(String),
    #[error("left-hand side not linear (variable {0})")]
    NotLinear(String),
    #[error("not a beta redex")]
    NotARedex,
    #[error("unresolved bound index {0}")]
    UnresolvedIndex(u32),
    #[error("root step not applicable: {0}")]
    NotApplicable(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
    #[error("well-foundedness fuel exhausted")]
    WellFoundednessExhausted,
    #[error("premisses cannot be partitioned: {0}")]
    NotPartitionable(String),
    #[error("invalid multicut: {0}")]
    Multicut(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
}

pub type Result<T> = std::result::Result<T, Error>;
