//! Benchmark harness and command implementations for the sci-forge binary.
//!
//! The binary in main.rs is a thin argument layer; everything it runs lives
//! here so the pipeline stays testable without spawning processes.

pub mod bench;
pub mod corpus;
pub mod ops;
pub mod pairs;
pub mod plot;
pub mod selftest;
