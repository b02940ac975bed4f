use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max |M - M^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("degenerate spectrum: eigenvalues {lower} and {upper} are closer than {gap:e}")]
    Degenerate { lower: f64, upper: f64, gap: f64 },

    #[error("matrix dimension {dim} exceeds the supported maximum {max}")]
    TooLarge { dim: usize, max: usize },

    #[error("vector is not normalized (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("zero vector cannot define a ray")]
    ZeroVector,

    #[error("invalid context: {0}")]
    InvalidContext(String),

    #[error("extravalence requires dim >= 3 (got dim {dim}, {count} contexts requested)")]
    ExtravalenceDim { dim: usize, count: usize },

    #[error("malformed Kochen-Specker instance: {0}")]
    MalformedInstance(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("incomparable product-state tails: {0}")]
    IncomparableTails(String),

    #[error("operator leaf at site {site} lies beyond truncation {n}")]
    SiteBeyondTruncation { site: u64, n: u64 },

    #[error("expression expands to more than {budget} terms")]
    TermBudget { budget: usize },

    #[error("inputs lie in the same sector; use matrix_element directly")]
    SameSector,

    #[error("invalid cascade configuration: {0}")]
    InvalidConfig(String),

    #[error("depth cap {cap} exceeded")]
    DepthCap { cap: usize },

    #[error("{0}")]
    InvalidArgument(String),
}
