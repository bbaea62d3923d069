//! Support code for the `lctree` command-line tool.

pub mod experiment;
pub mod io;
