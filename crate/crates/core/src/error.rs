use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    QubitIndex { qubit: usize, n_qubits: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("gate is not unitary (max deviation of G^dagger G from I is {deviation:.3e})")]
    NonUnitary { deviation: f64 },

    /// A numerical quantity became non-finite or left its valid domain.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// An operation was invoked in a state that does not permit it.
    #[error("usage error: {0}")]
    Usage(String),

    /// The replay buffer does not yet hold enough transitions to sample.
    #[error("replay buffer not ready: holds {available}, need {required}")]
    NotReady { available: usize, required: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
