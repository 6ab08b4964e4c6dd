//! File formats, checkpoints, run configuration, reports and the `xlpe`
//! command line on top of [`xlpe_core`].

#![warn(missing_docs)]

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod report;

pub use error::{Error, Result};
