use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Parse(String),

    #[error("invalid config: {field}: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Engine(#[from] bicfreeze::Error),

    #[error("csv export: {0}")]
    Csv(#[from] csv::Error),

    #[error("json export: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for rejected input, 3 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Config { .. } => 2,
            _ => 3,
        }
    }
}
