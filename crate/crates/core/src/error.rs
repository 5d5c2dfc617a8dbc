use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix needs {expected} entries, got {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("map is not completely positive (smallest Choi eigenvalue {0:e})")]
    NotCompletelyPositive(f64),
    #[error("operation is defined for qubits only, got dimension {0}")]
    NotQubit(usize),
    #[error("basis is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error("branch probabilities sum to {0}, expected 1")]
    ProbabilityMismatch(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
