//! Simulation study: data-generating process, first stage and coverage runs.

pub mod dgp;
pub mod experiment;
pub mod panel;
pub mod rates;
