use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cycle detected through node {0}")]
    CycleDetected(u64),
    #[error("multiple roots: nodes {0} and {1} have no parent")]
    MultipleRoots(u64, u64),
    #[error("internal node {0} has a single child")]
    UnaryInternalNode(u64),
    #[error("node {node} names unknown parent {parent}")]
    UnknownParent { node: u64, parent: u64 },
    #[error("node id {0} declared more than once")]
    DuplicateNode(u64),
    #[error("node id 0 is reserved for the root sentinel")]
    ReservedNodeId,
    #[error("a hierarchy needs at least two classes")]
    TooFewClasses,
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("class index {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("representation complexity is undefined for the empty set")]
    EmptySet,
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("invalid budget: r={r}, k={k} (both must be >= 1)")]
    InvalidBudget { r: usize, k: usize },
    #[error("no non-empty set satisfies the budget")]
    InfeasibleBudget,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("empty batch")]
    EmptyBatch,
    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
