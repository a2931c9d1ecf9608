//! Datasets, model files and the batch workflow behind the `qs` binary.

pub mod check;
pub mod config;
pub mod data;
pub mod model_io;
pub mod workflow;
