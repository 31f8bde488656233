use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("ill-conditioned system at eps = {eps:e}: condition estimate {estimate:e} exceeds {limit:e}")]
    Conditioning { eps: f64, estimate: f64, limit: f64 },

    #[error("near-zero Fredholm determinant at eps = {eps:e}, incident index {index}: delta = {delta}")]
    NearZeroFredholm {
        eps: f64,
        index: usize,
        delta: Complex64,
    },
}

impl LabError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        LabError::InvalidArgument(msg.into())
    }

    /// True for the numerical-conditioning class (singular system or resonant coupling).
    pub fn is_conditioning(&self) -> bool {
        matches!(
            self,
            LabError::Conditioning { .. } | LabError::NearZeroFredholm { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
