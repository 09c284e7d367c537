use alloc::string::String;

use thiserror::Error;

use crate::dirichlet::DirichletError;
use crate::mmspace::SpaceError;
use crate::transport::TransportError;

/// Errors raised by the verifiers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Dirichlet(#[from] DirichletError),
    #[error("entropy of {0} is infinite")]
    InfiniteEntropy(&'static str),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("inner solver stopped after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

pub(crate) fn invalid(msg: &str) -> LabError {
    LabError::Invalid(String::from(msg))
}

pub(crate) fn hypothesis(msg: &str) -> LabError {
    LabError::Hypothesis(String::from(msg))
}
