//! Library side of the `bmos` command line, shared with its integration tests.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;
