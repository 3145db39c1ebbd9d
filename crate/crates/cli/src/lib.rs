//! Command-line front end: JSON problem specs, subcommand dispatch and CSV/JSON reports.

pub mod cli;
pub mod commands;
pub mod error;
pub mod spec;

pub use cli::{run, Cli};
pub use commands::Artifact;
pub use error::CliError;
pub use spec::{MeasureSpec, ProblemSpec};
