//! Configuration documents and on-disk formats.

pub mod config;
pub mod csv;
pub mod snapshot;
