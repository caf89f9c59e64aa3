use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kick count N = 0 does not open an interferometer")]
    ZeroKicks,

    #[error("custom motional amplitudes are not normalized (norm² = {norm_sqr})")]
    Unnormalized { norm_sqr: f64 },

    #[error("Fock truncation unsafe: |alpha|^2 = {alpha_sqr:.3} exceeds dim/4 = {limit:.3}")]
    DisplacementTooLarge { alpha_sqr: f64, limit: f64 },

    #[error("Fock truncation unsafe: {leakage:.3e} population above the trusted band (dim = {dim})")]
    TruncationLeak { leakage: f64, dim: usize },

    #[error("register dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("|chi| = {modulus} exceeds 1")]
    Unphysical { modulus: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("fit did not converge after {starts} starts (best chi2 = {best_chi2:.4e})")]
    FitFailed { starts: usize, best_chi2: f64 },

    #[error("singular linear system: {0}")]
    Singular(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
