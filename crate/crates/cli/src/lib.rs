//! Command-line front end and the end-to-end pipelines behind it.

mod commands;
pub mod pipeline;

pub use commands::run;
