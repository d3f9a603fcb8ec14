//! File formats, configuration and commands of the `twinbeam` tool. The
//! numerical work lives in `twinbeam-core`.

pub mod app;
pub mod config;
pub mod error;
pub mod report;
pub mod traceio;

pub use config::{Mode, RunConfig};
pub use error::{AppError, AppResult};
