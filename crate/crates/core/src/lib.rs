//! Core engine for multimodal learning-session analytics.
//!
//! The pipeline runs in four stages, each a module:
//!
//! - [`ingest`] parses the session manifest, signal CSVs, activity JSONL and
//!   test JSON files.
//! - [`timeline`] maps every device clock onto the master (activity log)
//!   timeline and resamples streams onto common grids.
//! - [`analytics`] cleans streams, smooths them with a trailing time window,
//!   segments them by activity and derives statistics, correlations and
//!   extrema.
//! - [`store`] anonymizes learners and persists session documents.
//!
//! Data-parallel loops go through [`exec::Exec`]; build without the default
//! `parallel` feature for a rayon-free sequential engine.

pub mod analytics;
pub mod exec;
pub mod fixture;
pub mod ingest;
pub mod store;
pub mod timeline;

pub use exec::Exec;
