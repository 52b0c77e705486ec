//! Configuration parsing and subcommand drivers for the `agelab` binary.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{write_outputs, Output};
pub use config::{load_config, parse_config, RunConfig};
pub use error::{CliError, Result};
