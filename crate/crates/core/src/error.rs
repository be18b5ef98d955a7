use thiserror::Error;

/// Errors produced by network construction, enumeration, sampling and the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("branch {branch} references undeclared node `{node}`")]
    UnknownEndpoint { branch: usize, node: String },
    #[error("branch {branch} has non-positive conductance {g}")]
    NonPositiveConductance { branch: usize, g: f64 },
    #[error("network is disconnected: node `{0}` is unreachable from the first node")]
    Disconnected(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node index {0} is out of range")]
    NodeIndexOutOfRange(usize),
    #[error("fuse set is empty")]
    EmptyFuseSet,
    #[error("root set is empty")]
    EmptyRootSet,
    #[error("enumeration exceeded the limit of {limit} objects; use a sampling estimate instead")]
    TooLarge { limit: usize },
    #[error("injected currents sum to {sum}, not zero")]
    InvalidInjection { sum: f64 },
    #[error("injection vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fixed voltage set is empty")]
    EmptyBoundary,
    #[error("node `{0}` is assigned more than once")]
    DuplicateAssignment(String),
    #[error("linear system is singular")]
    SingularSystem,
    #[error("random walk exceeded the budget of {0} steps")]
    WalkBudgetExceeded(u64),
    #[error("fixed set must contain at least two nodes")]
    QTooSmall,
    #[error("target node `{0}` must not be a root")]
    TargetIsRoot(String),
    #[error("target node `{0}` must belong to the fixed set")]
    TargetNotFixed(String),
    #[error("start node `{0}` lies in the root set")]
    StartInR(String),
    #[error("nodes must be distinct")]
    SameNode,
    #[error("current matrix is inconsistent: row sums total {0}")]
    InconsistentCurrentMatrix(f64),
    #[error("branch set is not a spanning tree: {0}")]
    NotSpanningTree(String),
    #[error("branch set is not a separating forest: {0}")]
    NotSeparatingForest(String),
    #[error("orchard is not an arborescence")]
    NotArborescence,
    #[error("not a probability distribution: {0}")]
    BadDistribution(String),
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("worker count must be positive")]
    ZeroWorkers,
    #[error("invalid network file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
