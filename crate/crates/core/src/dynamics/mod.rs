//! Model families: the toy exponential-decay family and the cognitive
//! resource-depletion ODE with its phase-aligned RK4 integrator.

pub mod cognitive;
pub mod toy;

use thiserror::Error;

pub use cognitive::{
    cog_rhs, integrate_schedule, CogParam, CogParams, IntegrationConfig, ParamGuards, Phase,
    PhaseKind, TaskSchedule, Trajectory,
};
pub use toy::{toy_candidate, toy_generate, TimeGrid, ToyConfig, ToyForm, ToySeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("time must be positive for the 1/t^rho terms, got {0}")]
    SingularTime(f64),
    #[error("state became non-finite during phase {phase}")]
    NonFiniteState { phase: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid toy config: {0}")]
    InvalidToyConfig(String),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;
