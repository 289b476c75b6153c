//! Library side of the `anisobbm` command-line tool: configuration parsing,
//! subcommands and the acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
