pub mod cli;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod learning;
pub mod ranking;
pub mod relation;
pub mod synthetic;

pub use error::{Error, Result};
