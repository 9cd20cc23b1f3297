//! Pipeline orchestration for the `sectorfolio` binary: run configuration,
//! seed derivation and the subcommands.

pub mod commands;
pub mod config;
pub mod fsio;
pub mod seeds;
