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

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    /// A dataset invariant failed; `row` is 1-based over the data rows.
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid learner configuration: {0}")]
    InvalidLearner(String),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no events of the targeted type in the data")]
    NoEvents,

    #[error("stratum with event = {0} is empty")]
    EmptyStratum(u8),

    #[error("time {time} lies beyond the largest grid time {t_max}")]
    TimeBeyondGrid { time: f64, t_max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("simulation: {0}")]
    Simulation(String),

    #[error("unsupported model version {0}")]
    ModelVersion(u32),
}

impl Error {
    /// Stable, machine-parsable category used by the command-line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) | Error::NonNumeric { .. } | Error::MissingColumn(_) => "bad-input",
            Error::Json(_) | Error::ModelVersion(_) => "bad-model",
            Error::InvalidRow { .. } | Error::InvalidDataset(_) => "invalid-data",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::InvalidLearner(_) => "invalid-learner",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NoEvents => "no-events",
            Error::EmptyStratum(_) => "empty-stratum",
            Error::TimeBeyondGrid { .. } => "time-beyond-grid",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::Undefined(_) => "undefined-metric",
            Error::Simulation(_) => "simulation",
        }
    }
}
