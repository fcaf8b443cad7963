//! Command-line front end for the PUE detection simulator: configuration
//! files, CSV tables, SVG charts and the subcommands that produce them.

pub mod commands;
pub mod config;
pub mod svg;
pub mod table;

pub use commands::{run, Command};
pub use config::{load_config, parse_config, ConfigError, ExperimentConfig};
