//! Library side of the `fracwave` command-line tool: configuration,
//! scenario setup, artifact output and the verification suites.

pub mod arrays;
pub mod bundle;
pub mod commands;
pub mod config;
pub mod error;
pub mod scenario;
pub mod verify;

pub use commands::{run_optimize, simulate, Study};
pub use config::RunConfig;
pub use error::CliError;
