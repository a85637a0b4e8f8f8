//! Command-line front end for coincidence scans: configuration files,
//! CSV/metadata/plot output, and parallel scenario execution.

pub mod config;
pub mod plot;
pub mod runner;
pub mod table;
