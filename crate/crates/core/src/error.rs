use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("matrix dimension {matrix} does not match layout dimension {layout}")]
    LayoutMismatch { matrix: usize, layout: usize },

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("epistemic entries are not orthonormal (overlap {0:e})")]
    NonOrthogonalEntries(f64),

    #[error("operator is not unitary (residual {0:e})")]
    NotUnitary(f64),

    #[error("CPT verification failed: {0}")]
    CptVerificationFailed(String),

    #[error("index {index} falls in a degenerate eigenvalue cluster of `{system}`; basis-dependent query refused")]
    DegenerateBasisRefused { system: String, index: usize },

    #[error("index {index} out of range for `{system}` ({len} retained ontic states)")]
    IndexOutOfRange {
        system: String,
        index: usize,
        len: usize,
    },

    #[error("conditional probability {0:e} is negative beyond round-off")]
    NegativeProbability(f64),

    #[error("conditional probability has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("probability {0} exceeds 1 beyond round-off")]
    ProbabilityAboveOne(f64),

    #[error("stochastic row {row} at step {step} sums to {sum}")]
    NormalizationFailure { step: usize, row: usize, sum: f64 },

    #[error("amplitudes do not satisfy |alpha|^2 + |beta|^2 = 1 (got {0})")]
    InvalidAmplitudes(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
