use std::path::PathBuf;

use crate::genome::Genome;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid membership function count {count} (expected {min}..={max})")]
    InvalidCount { count: usize, min: usize, max: usize },

    #[error("rule {0} has no selected label in any variable")]
    MalformedRule(usize),

    #[error("inference for {0:?} systems is not supported")]
    UnsupportedFisKind(crate::fuzzy::FisKind),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("angle {0} deg is outside the open interval (-90, 90)")]
    AngleOutOfRange(f64),

    #[error("system is not representable under the encoding: {0}")]
    NotRepresentable(String),

    #[error("decoded rule base has no active rules")]
    NoActiveRules,

    #[error("genomes belong to different encodings ({0} vs {1} genes)")]
    SpecMismatch(usize, usize),

    #[error("series too short: need more than {needed} values, have {have}")]
    InsufficientLength { needed: usize, have: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("column {0:?} not found")]
    MissingColumn(String),

    #[error("column {0} is constant and cannot be normalized")]
    ConstantColumn(usize),

    #[error("split fraction {fraction} leaves an empty side for {len} samples")]
    DegenerateSplit { fraction: f64, len: usize },

    #[error("non-differentiable point: {0}")]
    NonDifferentiablePoint(String),

    #[error("fitness evaluation failed: {source}")]
    Fitness {
        genome: Box<Genome>,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
