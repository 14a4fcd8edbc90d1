//! Echo state network benchmark harness comparing a random control reservoir
//! against a reservoir built from a connectome connectivity matrix, on
//! Mackey-Glass one-shot prediction.

pub mod cli;
pub mod error;
pub mod esn;
pub mod experiment;
pub mod fixture;
pub mod mackey_glass;
pub mod report;
pub mod topology;

pub use error::{Error, ErrorCategory, Result};
