use thiserror::Error;

/// Errors produced anywhere in the controller stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Schur stable (spectral radius {radius:.6})")]
    NotSchurStable { radius: f64 },

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("matrix is not symmetric (max asymmetry {deviation:.3e})")]
    Asymmetric { deviation: f64 },

    #[error("matrix is not skew-symmetric (max deviation {deviation:.3e})")]
    NotSkew { deviation: f64 },

    #[error("matrix is not a rotation (orthogonality error {orthogonality:.3e}, det {det:.6})")]
    NotRotation { orthogonality: f64, det: f64 },

    #[error("infeasible reference trajectory: {0}")]
    Infeasible(String),

    #[error("attitude extraction singular: |pi_z x_b| = {0:.3e}")]
    ExtractionSingular(f64),

    #[error("thrust must be positive, got {0}")]
    NonPositiveThrust(f64),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("certificate violation at t = {t:.4}: {what}")]
    Certificate { t: f64, what: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
