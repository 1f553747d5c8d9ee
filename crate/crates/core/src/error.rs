use thiserror::Error;

/// Errors surfaced by the simulation kernels and the pipelines built on top.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("gate targets invalid for {n_qubits} qubits: {targets:?}")]
    BadTargets { n_qubits: usize, targets: Vec<usize> },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },

    #[error("operator is not Hermitian (imaginary residual {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("Kraus channel violates completeness (residual {residual:.3e})")]
    IncompleteChannel { residual: f64 },

    #[error("chain length must be even and >= 4, got {0}")]
    OddChainLength(usize),

    #[error("measurement outcome probability {0:.3e} below threshold; projection refused")]
    ImprobableOutcome(f64),

    #[error("input state is orthogonal to the requested symmetry sector")]
    SectorEmpty,

    #[error("input state is not invariant under the required translation power (residual {0:.3e})")]
    NotTranslationInvariant(f64),

    #[error("invalid noise parameters: {0}")]
    InvalidNoiseParams(String),

    #[error("gate {0} is not supported by the transpiler")]
    UnsupportedGate(String),

    #[error("eigensolver did not converge (residual {residual:.3e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("parameter vector has length {got}, expected {expected}")]
    BadParamLength { expected: usize, got: usize },

    #[error("no level crossing inside the scanned interval")]
    NoCrossing,

    #[error("optimization diverged: {0}")]
    Diverged(String),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
