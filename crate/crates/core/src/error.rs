use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("no data rows")]
    NoData,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numeric failure in {block}: {message}")]
    Numeric { block: String, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite state at iteration {iteration} after updating {block}")]
    NonFinite { iteration: usize, block: String },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn numeric(block: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Numeric {
            block: block.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag used in CLI error documents.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::Parse { .. } => "parse",
            Error::NoData => "no_data",
            Error::Parameter(_) => "parameter",
            Error::Numeric { .. } => "numeric",
            Error::InsufficientData(_) => "insufficient_data",
            Error::NonFinite { .. } => "non_finite",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
