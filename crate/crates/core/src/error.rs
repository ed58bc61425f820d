use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped into validation failures (bad shapes, widths, layouts,
/// malformed records) and numerical failures (singular kernels). The CLI maps
/// the two groups onto distinct exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfmError {
    #[error("width mismatch: expected {expected}, got {found}")]
    WidthMismatch { expected: usize, found: usize },

    #[error("position {position} out of range for width {width}")]
    PositionOutOfRange { position: usize, width: usize },

    #[error("duplicate position {0} in selection")]
    DuplicatePosition(usize),

    #[error("duplicate qubit id {0} in layout")]
    DuplicateQubit(u32),

    #[error("layout must contain at least one qubit")]
    EmptyLayout,

    #[error("selection must contain at least one position")]
    EmptySelection,

    #[error("layout of {0} qubits exceeds the supported maximum of {max}", max = crate::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("layout mismatch: expected {expected:?}, got {found:?}")]
    LayoutMismatch { expected: Vec<u32>, found: Vec<u32> },

    #[error("row {row} is not a probability distribution: {reason}")]
    NotStochastic { row: usize, reason: String },

    #[error("invalid bitstring {0:?}")]
    InvalidBitString(String),

    #[error("missing prepared state {0}")]
    MissingPreparedState(String),

    #[error("duplicate prepared state {0}")]
    DuplicatePreparedState(String),

    #[error("records disagree on shot count: {first} vs {other}")]
    ShotsMismatch { first: u64, other: u64 },

    #[error("counts for prepared state {prepared} sum to {sum}, expected {shots}")]
    CountsSumMismatch { prepared: String, sum: u64, shots: u64 },

    #[error("shot count must be at least {min}, got {found}")]
    TooFewShots { min: u64, found: u64 },

    #[error("layouts overlap on qubit {0}")]
    OverlappingLayouts(u32),

    #[error("selections do not partition the target layout: {0}")]
    NotAPartition(String),

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("missing cumulant tensor for qubits {0:?}")]
    MissingTensor(Vec<u32>),

    #[error("cumulant tensor carries no uncertainty array")]
    MissingSigma,

    #[error("value {value} for {name} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel is singular or numerically unusable (condition number {condition:e})")]
    SingularKernel { condition: f64 },
}

impl MfmError {
    /// True for failures of numerical origin rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, MfmError::SingularKernel { .. })
    }
}

pub type Result<T> = std::result::Result<T, MfmError>;
