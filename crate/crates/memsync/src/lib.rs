//! File formats, reports and the command-line front end for `memsync-core`.

pub mod cli;
pub mod dataset;
pub mod fitio;
pub mod manifest;
pub mod parallel;
pub mod plot;
pub mod quantity;

pub use memsync_core as core;
