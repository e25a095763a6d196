//! Command-line toolkit and file formats for the quantum sphere core.

pub mod cli;
pub mod codec;
pub mod config;
pub mod driver;
pub mod session;
pub mod suites;

pub use qsphere_core as core;
