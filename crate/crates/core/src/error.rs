use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parameters are infeasible: lambda(p) = {lambda} >= mu = {mu}")]
    Infeasible { lambda: f64, mu: f64 },

    #[error("no steady-state oracle for this model class ({0})")]
    UnsupportedModel(String),

    #[error("no critical value for level {0}")]
    MissingCriticalValue(f64),

    #[error("objective is infeasible everywhere on the box")]
    AllInfeasible,

    #[error("root finding failed: {0}")]
    NoRoot(String),

    #[error("trace and optimum disagree: {0}")]
    ModelMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
