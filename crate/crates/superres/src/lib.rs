//! File formats, a rayon executor and the command-line front end for
//! `superres-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod exec;
pub mod io;
pub mod table;

pub use error::CliError;
pub use exec::RayonExecutor;
