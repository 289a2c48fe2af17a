//! Batch front-end for the gridveil toolkit: JSON scenarios in, CSV tables, SVG
//! charts and a checksummed manifest out.

pub mod error;
pub mod manifest;
pub mod parallel;
pub mod pipeline;
pub mod scenario;
pub mod svg;
pub mod table;

pub use error::CliError;
pub use pipeline::{run, run_file, Command, Format, RunOptions, RunOutcome};
pub use scenario::ScenarioFile;
