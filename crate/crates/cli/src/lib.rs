//! Command-line front end for `dihedral-core`: estimates, solving,
//! verification and sweeps, with JSON file formats shared by all commands.

pub mod commands;
pub mod formats;

pub use commands::{run, ExitKind};
