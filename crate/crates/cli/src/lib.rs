//! Configuration, verification suites and command implementations behind the `pbs` binary.

pub mod commands;
pub mod config;
pub mod suites;

pub use config::{Config, ConfigError};
pub use suites::{run_suite, Suite};
