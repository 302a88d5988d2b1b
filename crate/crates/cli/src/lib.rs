//! Configuration, dispatch and output for the `sim` binary.

pub mod config;
pub mod output;
pub mod run;
