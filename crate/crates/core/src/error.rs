use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("function undefined at eigenvalue {eigenvalue:e}")]
    DomainError { eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Kraus family is not trace preserving: deviation {deviation:e}")]
    NotTracePreserving { deviation: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: distance {distance:e} is below the ratio threshold")]
    DegenerateInput { distance: f64 },

    #[error("reference distance is infinite, ratio undefined")]
    InfiniteDistance,

    #[error("map norm {norm} exceeds one")]
    NormExceedsOne { norm: f64 },

    #[error("operand is not positive: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositiveOperand { min_eigenvalue: f64 },

    #[error("state carries no bipartite dimensions")]
    MissingDims,

    #[error("invalid separable ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("operator family is not of local product form: {0}")]
    NotLocalForm(String),

    #[error("matrix is not unitary: deviation {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("no singular direction splits into a valid state pair")]
    DegenerateDirection,

    #[error("non-finite matrix entry")]
    NonFinite,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
