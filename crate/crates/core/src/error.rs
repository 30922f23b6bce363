use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a forward release: {prev} -> {next}")]
    NotForwardRelease { prev: String, next: String },

    #[error("no chronological order: all timestamps are equal")]
    NoChronologicalOrder,

    #[error("unusable partition: {0}")]
    UnusablePartition(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("quasi-separation: coefficient magnitude exceeded {limit} (feature {feature})")]
    QuasiSeparation {
        limit: f64,
        feature: usize,
        /// Coefficients at the iteration where divergence was detected.
        coefficients: Vec<f64>,
    },

    #[error("singular information matrix")]
    Singular,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("schema mismatch: model expects {expected} columns, got {got}")]
    SchemaMismatch { expected: usize, got: usize },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            other => Error::Stage { stage, source: Box::new(other) },
        }
    }
}
