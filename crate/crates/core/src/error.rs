use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("expected {expected} entries, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("entry ({i}, {j}) is not finite")]
    NotFinite { i: usize, j: usize },

    #[error("entry ({i}, {j}) is negative: {value}")]
    Negative { i: usize, j: usize, value: f64 },

    #[error("diagonal entry {i} is {value}, expected 0")]
    NonZeroDiagonal { i: usize, value: f64 },

    #[error("asymmetric entries ({i}, {j}): {a} vs {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("triangle inequality violated: d({i},{j}) = {dij} > d({i},{k}) + d({k},{j}) = {via}")]
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        dij: f64,
        via: f64,
    },

    #[error("all distances are zero")]
    AllZero,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("reference distance between {i} and {j} is zero")]
    ZeroReference { i: usize, j: usize },

    #[error("graph is disconnected ({components} components, sizes {sizes:?})")]
    Disconnected {
        components: usize,
        sizes: Vec<usize>,
    },

    #[error("node {0} has no neighbours")]
    IsolatedNode(String),

    #[error("self-loop on node {0}")]
    SelfLoop(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("requested {requested} pairs but only {available} exist")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("point ({0}, {1}) is not inside the open unit disk")]
    OutsideDisk(f64, f64),

    #[error("point is not on the hyperboloid (residual {0:e})")]
    NotOnHyperboloid(f64),

    #[error("embedding left the representable disk at node {node} (radius {radius}); lower tau or use higher precision")]
    PrecisionLimit { node: usize, radius: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
