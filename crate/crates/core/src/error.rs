use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("register of {requested} qubits exceeds the {max}-qubit cap")]
    RegisterOverflow { requested: usize, max: usize },
    #[error("qubit {index} out of bounds for a {num_qubits}-qubit register")]
    OutOfBounds { index: usize, num_qubits: usize },
    #[error("two-qubit operation addressed qubit {0} twice")]
    Aliased(usize),
    #[error("dimension mismatch: {left} vs {right} qubits")]
    DimensionMismatch { left: usize, right: usize },
    #[error("amplitude vector of length {0} is not 2^n for 1 <= n <= 8")]
    InvalidLength(usize),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("amplitude vector contains a non-finite entry")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("bit string length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("SIFT response requires a message bit")]
    MissingMessageBit,
    #[error("invalid bit string: {0}")]
    Parse(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment spec field `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// True for failures caused by the experiment's inputs rather than the environment.
    pub fn is_validation(&self) -> bool {
        matches!(self, Self::InvalidSpec { .. } | Self::Protocol(_))
    }
}
