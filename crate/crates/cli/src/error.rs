use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Numerical(#[from] finiteband::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Parse(_) | CliError::Io { .. } => 2,
            CliError::Numerical(e) if e.is_numerical() => 3,
            CliError::Numerical(_) => 1,
        }
    }
}
