use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("invalid coordinates: expected {expected} angles, got {got}")]
    InvalidCoordinates { expected: usize, got: usize },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("aliasing risk: grid exactness {exactness} is below required {required}")]
    AliasingRisk { exactness: usize, required: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    #[error("bandwidth error: {0}")]
    Bandwidth(String),

    #[error("normalization failure: {0}")]
    NormalizationFailure(String),

    #[error("orthogonality violation in class {class}: rows {first} and {second} overlap by {overlap:.3e}")]
    OrthogonalityViolation {
        class: usize,
        first: usize,
        second: usize,
        overlap: f64,
    },

    #[error("unsupported noise: {0}")]
    UnsupportedNoise(String),

    #[error("invalid noise model: {0}")]
    InvalidModel(String),

    #[error("profile is not invertible: {0}")]
    NotInvertibleProfile(String),

    #[error("ill-conditioned inversion for operator {operator}: factor {factor:.3e} below floor {floor:.1e}")]
    IllConditioned {
        operator: String,
        factor: f64,
        floor: f64,
    },

    #[error("kernel has not passed verification; run verify_sw first")]
    Unverified,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
