//! Batch experiment surface of the cross-diffusion solver: configuration
//! ingestion, the run/verify/twin/continuation/rate commands, and the
//! on-disk output formats.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
