//! Landscape sweeps and constrained SPSA fitting.

pub mod fit;
pub mod spsa;
pub mod sweep;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::estimators::EstimatorError;
use crate::objectives::ObjectiveError;

pub use fit::{default_bounds, fit_parameters, FitOutcome, FitRun, ParamSpace};
pub use spsa::{history_csv, spsa_minimize, Evaluation, SpsaConfig, SpsaError, SpsaRecord, SpsaResult};
pub use sweep::{
    multiplicative_grid, run_sweep, toy_lambda_grid, MiEstimator, SweepCurve, SweepPoint, SweepSpec,
    SweepTarget,
};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("fit aborted at iteration {iteration}: {reason}")]
    FitAborted {
        iteration: usize,
        reason: String,
        history: Vec<SpsaRecord>,
    },
}

pub type Result<T> = std::result::Result<T, OptimizeError>;
