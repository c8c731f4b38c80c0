use orthantloop::error::Error as NumError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Numeric(#[from] NumError),

    #[error("{0} check(s) failed")]
    ChecksFailed(usize),

    #[error("output: {0}")]
    Output(String),
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const PARSE: i32 = 2;
    pub const NUMERIC: i32 = 3;
    pub const DIVERGENT: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Io { .. } => exit::PARSE,
            CliError::Numeric(e) if e.is_divergent() => exit::DIVERGENT,
            CliError::Numeric(e) if e.is_input() => exit::PARSE,
            CliError::Numeric(_) | CliError::ChecksFailed(_) | CliError::Output(_) => exit::NUMERIC,
        }
    }
}
