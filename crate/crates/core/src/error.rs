use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("omega = {omega} is outside the spectral gap (-{m}, {m})")]
    OutsideGap { omega: f64, m: f64 },
    #[error("no solitary wave for this model at omega = {omega}: {reason}")]
    NoSolitaryWave { omega: f64, reason: String },
    #[error("profile integration diverged at omega = {omega}: {reason}")]
    IntegrationDiverged { omega: f64, reason: String },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parity defect {defect:e} exceeds tolerance {tol:e}")]
    ParityDefect { defect: f64, tol: f64 },
    #[error("no sign change of {quantity} on [{a}, {b}]")]
    NoSignChange { quantity: String, a: f64, b: f64 },
    #[error("eigensolver failed at omega = {omega}")]
    Eigensolver { omega: f64 },
    #[error("root search failed: {0}")]
    RootSearch(String),
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Validation errors map to exit code 2, everything numerical to 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::OutsideGap { .. } | Error::Config(_) | Error::GridMismatch(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::OutsideGap { .. } => "outside_gap",
            Error::NoSolitaryWave { .. } => "no_solitary_wave",
            Error::IntegrationDiverged { .. } => "integration_diverged",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::ParityDefect { .. } => "parity_defect",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::Eigensolver { .. } => "eigensolver",
            Error::RootSearch(_) => "root_search",
            Error::Config(_) => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
