//! File formats, plot-data export and subcommands of the `povm-coherence`
//! command-line tool.

pub mod commands;
pub mod error;
pub mod io;
pub mod plot;

pub use commands::{run, Cli};
pub use error::{CliError, Result};
