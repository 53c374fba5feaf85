use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by every part of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    BadArity {
        line: usize,
        expected: String,
        found: usize,
    },

    #[error("line {line}: duplicate token {token:?}")]
    DuplicateToken { line: usize, token: String },

    #[error("line {line}: duplicate lexicon entry {source_token:?} -> {target_token:?}")]
    DuplicateEntry {
        line: usize,
        source_token: String,
        target_token: String,
    },

    #[error("line {line}: cannot parse value {value:?}")]
    BadValue { line: usize, value: String },

    #[error("line {line}: non-finite value {value:?}")]
    NonFinite { line: usize, value: String },

    #[error("line {line}: negative weight {weight}")]
    NegativeWeight { line: usize, weight: f64 },

    #[error("bad magic {found:?}, expected \"CLD1\"")]
    BadMagic { found: [u8; 4] },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("id sidecar holds {found} ids, expected {expected}")]
    IdCountMismatch { expected: usize, found: usize },

    #[error("line {line}: malformed alignment pair {token:?}")]
    MalformedPair { line: usize, token: String },

    #[error("line {line}: alignment {source_index}-{target_index} outside sentence lengths {source_len}/{target_len}")]
    IndexRange {
        line: usize,
        source_index: usize,
        target_index: usize,
        source_len: usize,
        target_len: usize,
    },

    #[error("line {line}: malformed parallel sentence pair: {reason}")]
    MalformedParallel { line: usize, reason: String },

    #[error("alignment file has {found} lines but corpus has {expected} sentence pairs")]
    AlignmentCount { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("row {row} has zero norm")]
    ZeroNorm { row: usize },

    #[error("need at least {required} rows, found {found}")]
    TooFewRows { required: usize, found: usize },

    #[error("SVD did not converge within {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    #[error("matrix is not orthogonal: |M^T M - I|_F = {deviation:e}")]
    NotOrthogonal { deviation: f64 },

    #[error("CSLS neighbourhood size {k} exceeds {side} size {size}")]
    NeighbourhoodTooLarge {
        k: usize,
        side: &'static str,
        size: usize,
    },

    #[error("no gold source token is present among the queries")]
    EmptyIntersection,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("zero variance in correlation input")]
    ZeroVariance,

    #[error("malformed language tag {0:?}")]
    MalformedTag(String),

    #[error("every token is already prefixed with {0:?}")]
    AlreadyPrefixed(String),

    #[error("all translations of {0:?} have zero weight")]
    ZeroWeightSource(String),

    #[error("translation {target:?} of {source_token:?} is not a single token")]
    MultiTokenTranslation {
        source_token: String,
        target: String,
    },

    #[error("layer {layer} out of range for {layer_count} layers")]
    LayerOutOfRange { layer: usize, layer_count: usize },

    #[error("no aligned token pairs available")]
    NoAlignedPairs,

    #[error("only {usable} usable supervision pairs, need at least {required}")]
    Underdetermined { usable: usize, required: usize },

    #[error("{count} ids occur in both the training and evaluation sets")]
    OverlappingIds { count: usize },

    #[error("unknown item id {0:?}")]
    UnknownId(String),

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
