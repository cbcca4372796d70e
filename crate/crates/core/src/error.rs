use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("monomial {monomial} cannot be represented by the basis")]
    InfeasibleStructure { monomial: String },
    #[error("integration blew up at t = {t}")]
    Blowup { t: f64 },
    #[error("periodic orbit not found: {0}")]
    OrbitNotFound(String),
    #[error("parameters outside the validity region: {0}")]
    RegionViolation(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("{stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
