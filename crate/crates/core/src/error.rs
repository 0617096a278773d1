use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("length error: need {needed} entries, have {have}")]
    Length { needed: usize, have: usize },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("decay error: {0}")]
    Decay(String),
    #[error("divergence error: {0}")]
    Divergence(String),
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("quadrature error: {0}")]
    Quadrature(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
