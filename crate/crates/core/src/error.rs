use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("base must be between 2 and 36, got {0}")]
    InvalidBase(u32),

    #[error("invalid window: gamma_min {gamma_min} > gamma_max {gamma_max}")]
    InvalidWindow { gamma_min: i32, gamma_max: i32 },

    #[error("base mismatch: {left} vs {right}")]
    BaseMismatch { left: u32, right: u32 },

    #[error("window mismatch")]
    WindowMismatch,

    #[error("digit {digit} out of range for base {base}")]
    DigitOutOfRange { digit: u32, base: u32 },

    #[error("{0} has no finite p-adic digit expansion")]
    NotFinitelyRepresentable(String),

    #[error("point lies outside the root ball of radius p^{gamma_max}")]
    OutsideRootBall { gamma_max: i32 },

    #[error("level {level} outside window [{gamma_min}, {gamma_max}]")]
    LevelOutOfWindow {
        level: i32,
        gamma_min: i32,
        gamma_max: i32,
    },

    #[error("the root ball has no parent")]
    RootHasNoParent,

    #[error("a leaf ball has no children")]
    LeafHasNoChildren,

    #[error("invalid digit path {0:?}")]
    InvalidPath(String),

    #[error("dendrogram node {node} has {count} children, more than base {base}")]
    BranchOverflow {
        node: String,
        count: usize,
        base: u32,
    },

    #[error("window [{gamma_min}, {gamma_max}] cannot hold an embedding that needs levels [0, {required}]")]
    WindowTooShallow {
        gamma_min: i32,
        gamma_max: i32,
        required: i32,
    },

    #[error("{what} has {size} leaves, above the limit of {limit}")]
    ScaleGuard {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("ball {0} has zero measure")]
    ZeroMeasure(String),

    #[error("no basis element at node {0}: fewer than two children carry measure")]
    NoBasisElement(String),

    #[error("digit {0} is the reference sub-ball of its node")]
    ReferenceDigit(u8),

    #[error("rate profile increases at level {level}")]
    MonotonicityViolation { level: i32 },

    #[error("rate at level {level} must be positive and finite, got {value}")]
    InvalidRate { level: i32, value: f64 },

    #[error("rate table has no value for level {0}")]
    MissingRate(i32),

    #[error("unsupported tail model {0:?}; only \"vanishing\" is accepted")]
    UnsupportedTail(String),

    #[error("alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),

    #[error("negative value {value} at leaf {leaf}")]
    NegativeValue { leaf: String, value: String },

    #[error("times must be finite and nonnegative, got {0}")]
    InvalidTime(f64),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("distance matrix is not square or not symmetric: {0}")]
    MalformedSpace(String),

    #[error("space is not ultrametric ({} violations)", .0.len())]
    NotUltrametric(Vec<crate::embedding::Violation>),

    #[error("generator does not have the weighted block structure: {0}")]
    GeneratorStructure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
