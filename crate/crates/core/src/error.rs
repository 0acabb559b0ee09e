use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("codebook parse error on line {line}: {message}")]
    CodebookParse { line: usize, message: String },

    #[error(
        "bisection did not converge after {iterations} iterations, final bracket [{lo}, {hi}]"
    )]
    NoConvergence { lo: f64, hi: f64, iterations: usize },

    #[error("no root bracketed in ({lo}, {hi}) for {what}")]
    RootNotBracketed {
        what: &'static str,
        lo: f64,
        hi: f64,
    },

    #[error("quadrature error estimate {error_estimate:e} exceeds threshold {threshold:e} (value {value})")]
    QuadratureNotConverged {
        value: f64,
        error_estimate: f64,
        threshold: f64,
    },

    #[error("negative distortion: full-CSI rate {full_csi} below expected rate {expected}; reports computed under different settings?")]
    NegativeDistortion { full_csi: f64, expected: f64 },

    #[error("rate report has no full-CSI rate; distortion is undefined")]
    MissingFullCsi,

    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
}
