//! Orchestration for `klsym`: configuration, parallel runs over closed
//! points, JSON/CSV reports, and cache administration.

pub mod cache_admin;
pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{ExponentInput, Mode, RunConfig};
pub use error::{CliError, CliResult};
pub use run::{run, Outcome, Session};

/// Environment variable naming the default cache file.
pub const CACHE_ENV: &str = "KLSYM_CACHE";
