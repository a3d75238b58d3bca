//! Experiment harness, file formats and command-line interface on top of
//! [`afrelay_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod frame_io;
pub mod harness;
pub mod output;

pub use error::{AppError, AppResult};
