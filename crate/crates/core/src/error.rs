use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: bad header, expected `{expected}`")]
    Header { path: PathBuf, expected: String },

    #[error("invalid week token `{0}`")]
    Week(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no city satisfies cohort criteria")]
    EmptyCohort,

    #[error("series for city {city} does not cover {what}")]
    Coverage { city: String, what: String },

    #[error("insufficient history: need at least {needed} values, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {0}")]
    Shape(String),

    #[error("unknown city {0}")]
    UnknownCity(String),

    #[error("not enough neighbor candidates: requested {requested}, available {available}")]
    NotEnoughNeighbors { requested: usize, available: usize },

    #[error("criterion `none` has no neighbor ranking")]
    NoCriterion,

    #[error("undefined MASE (constant seasonal pattern); MAE = {mae}")]
    UndefinedMase { mae: f64 },

    #[error("seasonal index {index} is earlier than period {period}")]
    SeasonalIndex { index: usize, period: usize },

    #[error("{0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
