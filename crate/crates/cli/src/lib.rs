//! Library side of the `slelab` command: configuration, result store and
//! experiment dispatch.

pub mod config;
pub mod run;
pub mod store;

pub use config::{resolve, Resolved, RunConfig, Source};
pub use run::{execute, Outcome};
pub use store::{run_id, ResultStore, RunManifest};
