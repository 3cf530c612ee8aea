//! HTTP API and command-line front end over `mmla-core`.
//!
//! [`Engine`] implements each operation once; [`api::router`] exposes it
//! over HTTP and the `mmla` binary from the shell.

pub mod api;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;

pub use config::Config;
pub use engine::Engine;
pub use error::{ErrorCode, ServiceError};
