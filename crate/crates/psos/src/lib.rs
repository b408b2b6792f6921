//! Simulator, exact verifier and experiment harness for the p-SOS model.
//!
//! The numerics live in `psos-core`; this crate adds configuration, file
//! formats, the experiments that need threads, and the `psos` binary.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod schema;
pub mod stats;
pub mod suites;

pub use error::{Error, Result};
