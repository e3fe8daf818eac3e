//! Batch pipeline over lead-time composition panels: ingestion, analysis
//! stages, and report emission, exposed as a library so the binary and the
//! integration tests share one entry point.

pub mod config;
pub mod pipeline;
pub mod plots;
pub mod reports;
