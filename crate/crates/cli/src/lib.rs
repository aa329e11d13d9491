//! Library half of the `qsc-forge` command-line tool.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod plot;
