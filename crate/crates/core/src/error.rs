use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("entangled weight {index} is degenerate: ‖AG₀b‖ = {norm:e}")]
    DegenerateEntangledWeight { index: usize, norm: f64 },

    #[error("rank-1 system is not a Riesz basis: smallest Gram eigenvalue {0:e}")]
    NotRieszBasis(f64),

    #[error("rank-1 system is not a frame for its span: smallest Gram eigenvalue {0:e}")]
    NotAFrame(f64),

    #[error("rank deficient: singular value {index} is {sigma:e}")]
    RankDeficient { index: usize, sigma: f64 },

    #[error("leading eigenvalue is not positive: {0:e}")]
    NonpositiveLeadingEigenvalue(f64),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("too few candidates: need {needed}, got {got}")]
    TooFewCandidates { needed: usize, got: usize },

    #[error("Â is singular or ill-conditioned (condition number {0:e})")]
    SingularAHat(f64),

    #[error("gradient descent diverged at iteration {0}")]
    Diverged(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}
