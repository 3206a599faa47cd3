//! Experiment driver for `fock-core`: configuration, Gram cache, CSV/JSON
//! artifacts and the acceptance checks behind `focklab verify`.

pub mod cache;
pub mod checks;
pub mod commands;
pub mod config;
pub mod format;
