use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("resolution exponent {0} outside supported range 0..={max}", max = crate::grid::MAX_RESOLUTION)]
    Resolution(u32),
    #[error("expected {expected} samples for resolution {j}, got {got}")]
    SampleCount { j: u32, expected: usize, got: usize },
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: u32, right: u32 },
    #[error("invalid exponent p = {0}; need p >= 1")]
    InvalidExponent(f64),
    #[error("level {k} out of range 0..={max}")]
    LevelOutOfRange { k: u32, max: u32 },
    #[error("band limit violated: spectral mass {mass:.3e} at |l| >= {limit}")]
    BandLimit { limit: usize, mass: f64 },
    #[error("aliasing guard: scale {lambda} exceeds {limit}")]
    Aliasing { lambda: f64, limit: f64 },
    #[error("invalid parameter {name}: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no admissible profile index for eps = {0}")]
    NoAdmissibleIndex(f64),
    #[error("degenerate regression input: {0}")]
    Degenerate(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> LabError {
    LabError::Parameter {
        name,
        reason: reason.into(),
    }
}
