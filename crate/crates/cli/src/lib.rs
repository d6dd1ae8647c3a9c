//! Command-line front end for `llcp`: problem files, subcommands and the
//! regression experiment.

pub mod args;
pub mod commands;
pub mod file;
pub mod regression;

pub use args::Cli;
pub use commands::{run, Report};
