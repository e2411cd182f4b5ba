use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state ({x}, {y}) lies outside the {width}x{height} map")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("heuristic bias {0} is outside [0, 1]")]
    InvalidBias(f64),
    #[error("decode threshold {0} is outside [0, 1)")]
    InvalidThreshold(f64),
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("empty input")]
    EmptyInput,
    #[error("ground-truth region has no promising node")]
    EmptyTruth,
    #[error("ground-truth edge field holds a non-binary value {value} at index {index}")]
    NonBinaryTruth { index: usize, value: f64 },
    #[error("dice denominator vanishes (truth and prediction are both all-zero)")]
    DegenerateDenominator,
    #[error("edge truth is not the edge labelling of the truth region")]
    InconsistentTruth,
    #[error("map generation failed after {0} attempts")]
    GenerationFailed(usize),
    #[error("planning problem is unsolvable on the free grid")]
    Unsolvable,
    #[error("only {found} of {required} RRT runs found a solution")]
    InsufficientSolutions { found: usize, required: usize },
    #[error("no prediction found for sample {0}")]
    MissingPrediction(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
