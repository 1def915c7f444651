//! Experiment front end for the shift-estimation core: JSON configuration,
//! parallel Monte Carlo drivers with deterministic reduction, CSV/JSON
//! emission and the command-line interface.

pub mod acceptance;
pub mod cli;
pub mod config;
pub mod output;
pub mod parallel;
pub mod runner;
