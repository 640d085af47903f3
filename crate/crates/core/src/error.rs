use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: length of {bytes} bytes is not a multiple of 16 (x, y, z, intensity as f32)")]
    ScanLength { path: PathBuf, bytes: u64 },
    #[error("{path}: non-finite coordinate in point {index}")]
    NonFinitePoint { path: PathBuf, index: usize },
    #[error("poses line {line}: expected 12 numbers, found {found}")]
    PoseTokenCount { line: usize, found: usize },
    #[error("poses line {line}: cannot parse {token:?} as a number")]
    PoseNumber { line: usize, token: String },
    #[error("poses line {line}: rotation deviates from orthonormal by {deviation:.3e}")]
    NotOrthonormal { line: usize, deviation: f64 },
    #[error("invalid fov mask {text:?}: {reason}")]
    FovMask { text: String, reason: String },
}

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("descriptor shape ({n_r}, {n_a}) does not match database ({db_n_r}, {db_n_a})")]
    ShapeMismatch {
        n_r: usize,
        n_a: usize,
        db_n_r: usize,
        db_n_a: usize,
    },
    #[error("frame id {id} is not greater than the previous id {previous}")]
    FrameOrder { id: u64, previous: u64 },
    #[error("record {id} position presence disagrees with the rest of the database")]
    PositionPresence { id: u64 },
    #[error("kd-tree index has not been built")]
    IndexNotBuilt,
}

#[derive(Debug, Error)]
pub enum DbError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic {found:?}, expected \"SOLIDDB1\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported database version {found}, expected 1")]
    VersionMismatch { found: u16 },
    #[error("file truncated inside the header")]
    TruncatedHeader,
    #[error("file truncated inside record {index}")]
    TruncatedRecord { index: u64 },
    #[error("{extra} trailing bytes after the last record")]
    TrailingBytes { extra: usize },
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error(transparent)]
    Content(#[from] RetrievalError),
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no query has a ground-truth loop; Recall@1 is undefined")]
    NoGtLoops,
    #[error("rotation matrix deviates from orthonormal by {deviation:.3e}")]
    NotOrthonormal { deviation: f64 },
    #[error("bandwidth must be positive")]
    NonPositiveBandwidth,
    #[error("database has no positions; ground truth cannot be built")]
    MissingPositions,
    #[error("ground-truth table has no entry for query {0}")]
    UnknownQuery(u64),
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}")]
    Value { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}
