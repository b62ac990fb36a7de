use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("mask dimensions must be positive, got {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
    #[error("expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("mask shapes differ: {left:?} vs {right:?}")]
    ShapeMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("malformed RLE: {0}")]
    Rle(String),
}

/// A violated hyperparameter constraint, named by field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {constraint}")]
pub struct ConfigError {
    pub field: &'static str,
    pub constraint: &'static str,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid decode response: field `{field}`: {reason}")]
    Protocol { field: String, reason: String },
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("decoder timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("decoder process exited: {0}")]
    ProcessExited(String),
    #[error("protocol version mismatch: engine speaks {expected}, adapter speaks {actual}")]
    VersionMismatch { expected: u32, actual: u64 },
    #[error("no recorded response for request digest {0}")]
    ReplayMiss(String),
    #[error("trace line {line}: {reason}")]
    Trace { line: usize, reason: String },
    #[error("decoder failure: {0}")]
    Decode(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("predicted IoU {0} outside [0, 1]")]
    Domain(f64),
    #[error("decode failed for leaf {leaf} (frame {frame_index}): {source}")]
    Backend {
        leaf: usize,
        frame_index: u32,
        #[source]
        source: BackendError,
    },
    #[error("beam is empty")]
    EmptyBeam,
    #[error("no candidates to select from")]
    NoCandidates,
    #[error("exhaustive search over {leaves} pathways exceeds cap {cap}")]
    CapExceeded { leaves: u128, cap: u128 },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown scenario family `{0}`")]
    UnknownFamily(String),
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Mask(#[from] MaskError),
}
