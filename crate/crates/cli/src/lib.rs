//! Scenario ingestion, command dispatch, and deterministic artifact emission
//! for the blameless-control pipeline. The binary in `main.rs` is a thin
//! wrapper; everything here is callable from tests.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;
