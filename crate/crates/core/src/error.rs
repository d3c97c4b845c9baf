use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("stage {m} out of range for a sequence prefix of length {len}")]
    StageOutOfRange { m: usize, len: usize },

    #[error("invalid supernatural sequence: {0}")]
    InvalidSequence(String),

    #[error("element is not self-adjoint (coefficient residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("element is not 1-periodic (off-lattice residual {residual:.3e})")]
    NotOnePeriodic { residual: f64 },

    #[error("element is not in the image of the connecting map (residual {residual:.3e} > {tol:.1e})")]
    NotInImage { residual: f64, tol: f64 },

    #[error("stage 0 has no previous stage")]
    NoPreviousStage,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a probability vector: {0}")]
    NotProbability(String),

    #[error("Hausdorff distance of an empty set")]
    EmptySet,

    #[error("degenerate Lip-norm: L vanishes ({value:.3e}) on a non-scalar direction")]
    DegenerateLipNorm { value: f64 },

    #[error("incompatible thread at index {index} (residual {residual:.3e})")]
    IncompatibleThread { index: usize, residual: f64 },

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
