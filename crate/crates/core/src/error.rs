use thiserror::Error;

/// Errors raised by the simulator and its numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },

    #[error("duplicate qubit index {0}")]
    DuplicateQubit(usize),

    #[error("qubit subset must be nonempty and proper")]
    ImproperSubset,

    #[error("{0} is prime")]
    PrimeModulus(u64),

    #[error("a not coprime to N (a = {a}, N = {n})")]
    NotCoprime { a: u64, n: u64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("measurement on a state with zero probability for both outcomes")]
    CorruptState,

    #[error("resource guard: {qubits} qubits exceeds the limit of {limit}")]
    TooManyQubits { qubits: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
