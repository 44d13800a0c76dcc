//! Fitting initial-layer dynamical models to observations seen through an
//! unknown nonlinear layer, using nonparametric information-theoretic
//! objectives.

pub mod datagen;
pub mod dynamics;
pub mod estimators;
pub mod objectives;
pub mod optimize;
pub mod seed;
