use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} is outside the ground set [1, {n}]")]
    GroundMismatch { vertex: usize, n: usize },

    #[error("not a permutation of [1, {n}]: {detail}")]
    InvalidPermutation { n: usize, detail: String },

    #[error("arc ({0}, {1}) is a loop or leaves the ground set")]
    InvalidArc(usize, usize),

    #[error("bipartite pair parts must be disjoint (shared vertex {0})")]
    OverlappingParts(usize),

    #[error("bipartite pair has an empty part")]
    EmptyPart,

    #[error("digraph has arcs in both directions across the pair")]
    BothDirections,

    #[error("exhaustive check over {size} vertices exceeds the cap of {cap}; use the sampled refuter")]
    ExhaustiveCapExceeded { size: usize, cap: usize },

    #[error("no regular pair with both parts >= {floor}; best pair {best_left}x{best_right} deviates by {deviation:.4}")]
    FloorUnreachable {
        floor: usize,
        best_left: usize,
        best_right: usize,
        deviation: f64,
    },

    #[error("ternary partition failed at tree node {node}: {source}")]
    PartitionFailed {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("inconsistent block: {0}")]
    InconsistentBlocks(String),

    #[error("subset {subset:?} is not an {m}-subset of [1, {}]", 2 * m)]
    WrongSubsetSize { subset: Vec<usize>, m: usize },

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("q vanishes at index {0} where p does not")]
    AbsoluteContinuity(usize),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("exhaustive safety check needs |L|, |R| <= {cap}, got {left} and {right}")]
    SafetyCapExceeded { left: usize, right: usize, cap: usize },

    #[error("branching factor must be at least 2, got {0}")]
    BranchingTooSmall(usize),

    #[error("n = {n} exceeds the enumeration cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("constraint system is infeasible: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
