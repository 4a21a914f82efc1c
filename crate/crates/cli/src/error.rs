//! CLI-side errors: file handling, CSV structure, and config problems, all
//! carrying enough context (file, row) to act on.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] lgdid_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },

    #[error("{file} line {line}: {reason}")]
    MalformedRow {
        file: String,
        line: u64,
        reason: String,
    },

    #[error("{file} line {line}: recovery references unknown loan '{loan_id}'")]
    OrphanRecovery {
        file: String,
        line: u64,
        loan_id: String,
    },

    #[error("{file} line {line}: duplicate loan_id '{loan_id}'")]
    DuplicateLoan {
        file: String,
        line: u64,
        loan_id: String,
    },

    #[error("{file}: missing required column '{column}'")]
    MissingColumn { file: String, column: String },

    #[error("config {path}: {reason}")]
    Config { path: String, reason: String },

    #[error("refusing to serialize a non-finite value in {context}")]
    NonFinite { context: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
