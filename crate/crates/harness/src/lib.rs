//! Experiment driver for the path-space toolkit: deterministic Monte Carlo
//! fan-out, statistical acceptance tests, convergence sweeps, and
//! machine-readable reports behind a small CLI.

pub mod checks;
pub mod config;
pub mod mc;
pub mod report;
pub mod stats;
pub mod sweep;
