use thiserror::Error;

/// Errors raised by the toolkit. `exit_code` maps them onto the CLI contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("insufficient spectral headroom: {0}")]
    Headroom(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("numerical blow-up at t = {t}: {what}")]
    BlowUp { t: f64, what: String },
    #[error("stability condition violated: {0}")]
    Stability(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// 2 for usage/parameter problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite(_) | Error::BlowUp { .. } | Error::Stability(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
