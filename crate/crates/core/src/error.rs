use thiserror::Error;

use crate::dataset::DatasetError;
use crate::optimizers::OptimizeError;
use crate::pipeline::PipelineError;
use crate::sensitivity::SensitivityError;
use crate::surrogate::SurrogateError;

/// Crate-level error, one variant per module.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

impl Error {
    /// True for failures of the numerics (divergence, constant output, non-finite
    /// values) as opposed to bad input data or configuration.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Dataset(_) => false,
            Error::Surrogate(e) => e.is_numerical(),
            Error::Sensitivity(e) => e.is_numerical(),
            Error::Optimize(e) => e.is_numerical(),
            Error::Pipeline(e) => e.is_numerical(),
        }
    }
}
