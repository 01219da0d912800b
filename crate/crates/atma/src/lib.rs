//! File formats, configuration and reporting around [`atma_core`].
//!
//! The `atma` binary is a thin layer over these modules.

pub mod config;
pub mod error;
pub mod logfile;
pub mod report;
pub mod scenario;
pub mod stops;

pub use error::{AppError, ExitCode};
