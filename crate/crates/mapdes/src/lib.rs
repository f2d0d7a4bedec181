//! Configuration, file formats and the command-line driver for the
//! dairy-farm energy trading simulator in `mapdes-core`.

pub mod cli;
pub mod config;
pub mod output;
pub mod profile_csv;
pub mod qtable_file;
pub mod reports;
