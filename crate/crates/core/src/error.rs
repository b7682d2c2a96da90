use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel evaluated at negative distance {0}")]
    NegativeDistance(f64),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("particles {a} and {b} share the same reference position")]
    DuplicatePosition { a: usize, b: usize },

    #[error("non-finite reference position or non-positive volume at particle {0}")]
    InvalidParticle(usize),

    #[error("moment matrix of particle {particle} is singular (det = {det:e})")]
    SingularMoment { particle: usize, det: f64 },

    #[error("tensor determinant {det:e} is not positive")]
    NonPositiveDeterminant { det: f64 },

    #[error("element inversion at particle {particle}: det(F) = {det:e}")]
    ElementInversion { particle: usize, det: f64 },

    #[error("negative equivalent plastic strain {0}")]
    NegativePlasticStrain(f64),

    #[error(
        "return mapping did not converge after {iterations} iterations (residual {residual:e} Pa)"
    )]
    ReturnMapDiverged { iterations: usize, residual: f64 },

    #[error("non-positive mixture density at particle {0}")]
    NonPositiveDensity(usize),

    #[error("non-finite state detected at outer step {step}: {what}")]
    NonFiniteState { step: usize, what: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot parse error: {0}")]
    SnapshotParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
