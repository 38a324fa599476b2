use thiserror::Error;

/// Errors raised by measure construction, simulation and analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measure violates the Lévy integrability condition: {0}")]
    NotLevy(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("basis is not orthonormal: {0}")]
    NonOrthonormalBasis(String),

    #[error("index of the jump measure is zero: {0}")]
    ZeroIndex(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid escapes the ball of radius {radius}: point at distance {distance}")]
    GridOutsideBall { radius: f64, distance: f64 },

    #[error("covariance matrix is not positive semidefinite within jitter tolerance (last jitter {jitter:e})")]
    NotPsd { jitter: f64 },

    #[error("scale below grid resolution: {0}")]
    ScaleBelowResolution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fingerprint mismatch: {0}")]
    FingerprintMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 4 for provenance mismatches.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotPsd { .. } | Error::ZeroIndex(_) | Error::ScaleBelowResolution(_) => 3,
            Error::FingerprintMismatch(_) => 4,
            _ => 2,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::NotLevy(_) => "not_levy",
            Error::DimMismatch { .. } => "dim_mismatch",
            Error::NonOrthonormalBasis(_) => "non_orthonormal_basis",
            Error::ZeroIndex(_) => "zero_index",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridOutsideBall { .. } => "grid_outside_ball",
            Error::NotPsd { .. } => "not_psd",
            Error::ScaleBelowResolution(_) => "scale_below_resolution",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::FingerprintMismatch(_) => "fingerprint_mismatch",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
