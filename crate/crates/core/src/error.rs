use thiserror::Error;

/// Crate-wide error type. Variant names double as the stable machine-parsable
/// error codes printed by the CLI (`ERROR <code>: <message>`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("distribution has a negative entry: mass[{index}] = {value}")]
    NegativeMass { index: usize, value: f64 },
    #[error("distribution entries sum to {sum}, not 1 (abs tolerance 1e-12)")]
    NotNormalized { sum: f64 },
    #[error("mass array has length {got}, expected 2^D = {expected}")]
    BadLength { got: usize, expected: usize },
    #[error("number of views D = {0} outside supported range [1, 16]")]
    ViewsOutOfRange(usize),
    #[error("edge probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("node count n = {0} must be even and at least 4")]
    BadNodeCount(usize),
    #[error("operands have different numbers of views: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("Chernoff parameter t = {0} outside [0, 1]")]
    TOutOfRange(f64),
    #[error("KL support violation: a[{index}] = {a_val} > 0 but b[{index}] = 0")]
    SupportViolation { index: usize, a_val: f64 },
    #[error("distributions have disjoint supports (Bhattacharyya sum is 0)")]
    DisjointSupports,
    #[error("labeling length {0} is odd; balanced labelings need even n")]
    OddN(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("labeling is not balanced (signs sum to {0})")]
    Unbalanced(i64),
    #[error("observed bitmask {mask:#x} has zero mass under both p and q")]
    ZeroZeroMass { mask: u16 },
    #[error("exact ML enumeration requires n <= 32, got n = {0}")]
    TooLargeForExact(usize),
    #[error("restarts must be at least 1")]
    BadRestarts,
    #[error("k = {k} outside [1, n/2 - 1] = [1, {max}]")]
    KOutOfRange { k: usize, max: usize },
    #[error("divergence must be nonnegative, got {0}")]
    NegativeDivergence(f64),
    #[error("tilted pair violates the KL balance condition (residual {0:.3e} > 1e-8)")]
    InvalidTilt(f64),
    #[error("expected misclassification count must be positive, got {0}")]
    NonpositiveMis(f64),
    #[error("trial count must be at least 1")]
    BadTrials,
    #[error("target threshold statistic {0} must be strictly positive")]
    NonpositiveTau(f64),
    #[error("target threshold statistic {target} unreachable: maximum attainable is {max}")]
    Unreachable { target: f64, max: f64 },
    #[error("unknown point shape: {0}")]
    BadShape(String),
    #[error("model spec invalid: {0}")]
    BadModelSpec(String),
    #[error("sweep config invalid: {0}")]
    BadConfig(String),
    #[error("malformed JSON: {0}")]
    InvalidJson(String),
    #[error("malformed tensor file: {0}")]
    BadTensorFile(String),
    #[error("I/O failure: {0}")]
    IoError(#[from] std::io::Error),
}

impl Error {
    /// Stable error code used for the CLI's `ERROR <code>: <message>` contract.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NegativeMass { .. } => "NegativeMass",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::BadLength { .. } => "BadLength",
            Error::ViewsOutOfRange(_) => "ViewsOutOfRange",
            Error::ProbabilityOutOfRange(_) => "ProbabilityOutOfRange",
            Error::BadNodeCount(_) => "BadNodeCount",
            Error::DimensionMismatch(..) => "DimensionMismatch",
            Error::TOutOfRange(_) => "TOutOfRange",
            Error::SupportViolation { .. } => "SupportViolation",
            Error::DisjointSupports => "DisjointSupports",
            Error::OddN(_) => "OddN",
            Error::LengthMismatch(..) => "LengthMismatch",
            Error::Unbalanced(_) => "Unbalanced",
            Error::ZeroZeroMass { .. } => "ZeroZeroMass",
            Error::TooLargeForExact(_) => "TooLargeForExact",
            Error::BadRestarts => "BadRestarts",
            Error::KOutOfRange { .. } => "KOutOfRange",
            Error::NegativeDivergence(_) => "NegativeDivergence",
            Error::InvalidTilt(_) => "InvalidTilt",
            Error::NonpositiveMis(_) => "NonpositiveMis",
            Error::BadTrials => "BadTrials",
            Error::NonpositiveTau(_) => "NonpositiveTau",
            Error::Unreachable { .. } => "Unreachable",
            Error::BadShape(_) => "BadShape",
            Error::BadModelSpec(_) => "BadModelSpec",
            Error::BadConfig(_) => "BadConfig",
            Error::InvalidJson(_) => "InvalidJson",
            Error::BadTensorFile(_) => "BadTensorFile",
            Error::IoError(_) => "IoError",
        }
    }

    /// CLI exit status: 2 for I/O failures, 1 for everything else.
    pub fn exit_status(&self) -> i32 {
        match self {
            Error::IoError(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
