use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pair has no complete observations after removing missing values")]
    EmptyPair,
    #[error("length mismatch: x has {x} values, y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("log-space binning requires strictly positive values, found {0}")]
    NonPositiveForLog(f64),
    #[error("non-finite value {0} in input")]
    NonFinite(f64),
    #[error("bin count K must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("label must be one of 1, -1, 0; got {0}")]
    InvalidLabel(i64),

    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("x = {x} outside spline support [{lo}, {hi}]")]
    OutOfSupport { x: f64, lo: f64, hi: f64 },

    #[error("bad architecture: {0}")]
    BadArchitecture(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label {label} cannot be used with a {n_classes}-class model")]
    LabelOutOfRange { label: i64, n_classes: usize },

    #[error("model file: bad magic bytes")]
    BadMagic,
    #[error("model file format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u16, expected: u16 },
    #[error("model file is truncated or its checksum does not match")]
    CorruptChecksum,
    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error("metric needs both positive and negative labels")]
    DegenerateLabels,
    #[error("value {value} outside [{lo}, {hi}] for {what}")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("weights sum to zero")]
    ZeroWeightMass,
    #[error("need at least {k} groups for {k}-fold split, have {groups}")]
    TooFewGroups { k: usize, groups: usize },
    #[error("input has zero variance")]
    ZeroVariance,
    #[error("matrix is not a probability distribution: {0}")]
    NotADistribution(String),
    #[error("least-squares system is singular")]
    SingularFit,

    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input or configuration rather than
    /// runtime or data failures.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidParams(_) | Error::InvalidK(_))
    }
}
