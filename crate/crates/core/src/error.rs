use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("dressed state {index} is ambiguous: max bare overlap {overlap:.3} with {label:?}")]
    Label {
        index: usize,
        label: (usize, usize),
        overlap: f64,
    },
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("step control violated: {0}")]
    Resolution(String),
    #[error("series diverges: {0}")]
    Divergence(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("protocol configuration: {0}")]
    Protocol(String),
}

pub type Result<T> = std::result::Result<T, Error>;
