//! Configuration, experiment drivers and file output for the solver.

pub mod config;
pub mod run;

pub use config::{parse_complex, parse_config, parse_entries, ConfigError, Entry, RunConfig};
pub use run::{run, RunError, RunOutcome, RunStatus};
