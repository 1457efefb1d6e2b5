use modaldyn_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Numerical(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 0 ok, 2 config/parse, 3 numerical invariant, 4 degeneracy refusal,
    /// 5 channel verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } | CliError::Json(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Core(e) => match e {
                CoreError::DegenerateBasisRefused { .. } => 4,
                CoreError::CptVerificationFailed(_) => 5,
                CoreError::NotHermitian(_)
                | CoreError::InvalidDensityMatrix(_)
                | CoreError::NonOrthogonalEntries(_)
                | CoreError::NotUnitary(_)
                | CoreError::NegativeProbability(_)
                | CoreError::ImaginaryResidue(_)
                | CoreError::ProbabilityAboveOne(_)
                | CoreError::NormalizationFailure { .. } => 3,
                CoreError::NotSquare(..)
                | CoreError::DimensionMismatch { .. }
                | CoreError::InvalidLayout(_)
                | CoreError::LayoutMismatch { .. }
                | CoreError::UnknownLabel(_)
                | CoreError::IndexOutOfRange { .. }
                | CoreError::InvalidAmplitudes(_)
                | CoreError::InvalidArgument(_) => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
