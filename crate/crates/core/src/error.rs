use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor product dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("operator dimension {0} is not a cavity (x) atom product space")]
    NotComposite(usize),

    #[error("steady state is not unique (reciprocal condition number {rcond:.3e})")]
    DegenerateSteadyState { rcond: f64 },

    #[error("adaptive integrator step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("steady-state photon number {0:.3e} is too small to condition on an emission")]
    VanishingIntensity(f64),

    #[error("correlator tail has not decayed: |R(tau_max)| = {value:.3e} at tau_max = {tau_max}")]
    UnconvergedTail { tau_max: f64, value: f64 },

    #[error("eigenvector basis is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("single-step jump probability {0:.3e} exceeds 0.1; reduce dt")]
    StepTooLarge(f64),

    #[error("state norm underflow ({0:.3e}) before renormalization")]
    NormUnderflow(f64),

    #[error("no photon-counter triggers available for the triggered average")]
    NoTriggers,

    #[error("wigner grid cannot be extended far enough: boundary |W| = {boundary:.3e}")]
    TruncationLeak { boundary: f64 },

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
