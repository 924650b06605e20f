//! The `seed-eval` command-line tool: scoring, meta-evaluation against human
//! ratings, failure-mode rates, and SVG rendering of the resulting tables.

pub mod commands;
pub mod config;
pub mod report;
pub mod svg;

pub use commands::run;
pub use config::{Cli, RunConfig};
