use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Möbius parameter |a| = {0} is not inside the open unit disk")]
    ParameterOutsideDisk(f64),

    #[error("ball with center ({cx}, {cy}) and radius {radius} is not strictly inside the unit disk")]
    BallNotInside { cx: f64, cy: f64, radius: f64 },

    #[error("radius {0} must lie in the open interval (0, 1)")]
    InvalidRadius(f64),

    #[error("contrast {0} must be greater than -1")]
    InvalidContrast(f64),

    #[error("invalid truncation order: {0}")]
    InvalidOrder(String),

    #[error("precision of {0} bits is below the 64-bit minimum")]
    PrecisionTooLow(u32),

    #[error("matrix is not Hermitian (max |M - M*| = {0:e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: order {0} vs order {1}")]
    DimensionMismatch(usize, usize),

    #[error("noise level {0} must be finite and non-negative")]
    InvalidNoiseLevel(f64),

    #[error("noise cannot be scaled against an all-zero datum")]
    ZeroDatum,

    #[error("contrast lower bound {0} must be positive")]
    InvalidBetaLower(f64),

    #[error("regularization tuning factor {0} must be positive")]
    InvalidMu(f64),

    #[error("hexagon radius {0} must lie in the open interval (0, 1)")]
    InvalidHexRadius(f64),

    #[error("reconstructions were computed on different tilings")]
    TilingMismatch,

    #[error("invalid phantom: {0}")]
    Phantom(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
