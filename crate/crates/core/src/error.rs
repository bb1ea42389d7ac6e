use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{file}: row {row}, column `{column}`: {message}")]
    Schema {
        file: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{file}: row {row}: unknown {field} label `{value}` (valid: {valid})")]
    UnknownLabel {
        file: String,
        row: usize,
        field: String,
        value: String,
        valid: String,
    },

    #[error("duplicate flight key ({flight_no}, {date}) in flights table")]
    DuplicateKey { flight_no: String, date: String },

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("data error: {0}")]
    Data(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("columns `{first}` and `{second}` are identical")]
    DuplicateColumns { first: String, second: String },

    #[error("column `{column}` is collinear with [{with}]")]
    Collinear { column: String, with: String },

    #[error("model not identified: {0}")]
    Identification(String),

    #[error("singular information matrix (min eigenvalue {min_eigen:e}, max {max_eigen:e})")]
    Singular { min_eigen: f64, max_eigen: f64 },

    #[error("estimation did not converge: {0}")]
    NotConverged(String),

    #[error("cannot classify respondent: {0}")]
    Classification(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NotConverged(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
