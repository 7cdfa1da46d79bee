use thiserror::Error;

/// Errors produced by the capacity library and its CLI front-end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{function}: argument {value} outside its domain ({expected})")]
    Domain {
        function: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("matrix is not positive semidefinite (residual pivot {pivot:e} at index {index})")]
    NotPositiveSemidefinite { index: usize, pivot: f64 },

    #[error("invalid covariance matrix: {0}")]
    InvalidMatrix(String),

    #[error("{subcarriers} sub-carriers cannot resolve {taps} channel taps (need N >= L)")]
    Aliasing { subcarriers: usize, taps: usize },

    #[error("quadrature did not converge: estimate {estimate:e} with error {error:e} after {intervals} intervals")]
    Quadrature {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("series stopped after {terms} outer terms without converging")]
    SeriesNotConverged { terms: usize },

    #[error("negative spectral variance {value:e} at {location}")]
    NegativeVariance { value: f64, location: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (non-convergence, non-PSD input)
    /// as opposed to invalid user input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveSemidefinite { .. }
                | Error::Quadrature { .. }
                | Error::NegativeVariance { .. }
                | Error::SeriesNotConverged { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
