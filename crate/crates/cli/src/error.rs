use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error(transparent)]
    Lib(#[from] morita::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
