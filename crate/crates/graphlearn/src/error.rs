use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_dev:.3e} exceeds {tol:.3e}")]
    Asymmetric { max_dev: f64, tol: f64 },

    #[error("negative adjacency entry a[{row},{col}] = {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("nonzero diagonal entry a[{index},{index}] = {value}")]
    NonzeroDiagonal { index: usize, value: f64 },

    #[error("non-finite entry at [{row},{col}]")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),

    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidFraction { name: &'static str, value: f64 },

    #[error("polynomial has {0} coefficients; at most 3 (order <= 2) are supported")]
    PolynomialOrder(usize),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("training graphs must share one size: found {found} nodes after {expected}")]
    MixedGraphSizes { expected: usize, found: usize },

    #[error("signal matrices must share one signal count: found {found} after {expected}")]
    MixedSignalCounts { expected: usize, found: usize },

    #[error("graph too small: need at least {min} nodes, got {got}")]
    GraphTooSmall { min: usize, got: usize },

    #[error("empty input list")]
    EmptyList,

    #[error("could not generate a connected graph after {0} attempts")]
    ConnectivityRetries(usize),

    #[error("unsupported model format version {0}")]
    ModelVersion(u32),

    #[error("assembled normal system disagrees with the numeric gradient: \
             residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    SystemSelfCheck { residual: f64, tol: f64 },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
