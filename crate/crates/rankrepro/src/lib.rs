//! CSV loaders, result documents, coverage experiments and the command-line
//! front end for `rankrepro-core`.

pub mod cli;
pub mod document;
pub mod harness;
pub mod io;

pub use rankrepro_core as core;
