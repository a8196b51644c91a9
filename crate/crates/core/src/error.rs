use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid count {0}: {1}")]
    InvalidCount(usize, &'static str),
    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),
    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("structural mismatch: {0}")]
    StructuralMismatch(String),
    #[error("instance size {n} exceeds base size {n_base}")]
    SizeExceedsBase { n: usize, n_base: usize },
    #[error("seed {seed} is registered as a test seed for base {base_id}")]
    SeedCollision { base_id: String, seed: u64 },
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("wrong problem class: expected {expected}")]
    WrongProblemClass { expected: crate::model::Problem },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("infeasible start solution: {0}")]
    InfeasibleStart(String),
    #[error("instance too large for exact oracle: n = {n}, limit = {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("reference cost must be positive, got {0}")]
    NonpositiveReference(f64),
    #[error("checksum mismatch in {0}")]
    ChecksumMismatch(String),
    #[error("unsupported format version {found} (expected {expected})")]
    VersionUnsupported { found: String, expected: u32 },
    #[error("external solver binary `{0}` not found")]
    BinaryNotFound(String),
    #[error("could not parse external solver output: {message}\n--- captured output ---\n{output}")]
    ParseError { message: String, output: String },
    #[error("external solution infeasible: {0}")]
    InfeasibleExternalSolution(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
