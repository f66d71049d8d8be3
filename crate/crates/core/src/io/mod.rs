//! Model and policy interchange: the `.pomdp` text format, the RockSample
//! generator, and alpha-vector policy files.

mod policy;
mod pomdp_format;
mod rocksample;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::{ModelError, PomdpModel};

pub use policy::{load_policy, save_policy, PolicyFile, POLICY_MAGIC};
pub use pomdp_format::{parse_pomdp, write_pomdp};
pub use rocksample::{
    gen_rocksample, sensor_accuracy, sensor_efficiency, RockSampleLayout, RockSampleParams,
    DEFAULT_HALF_EFFICIENCY_DISTANCE, GOOD, BAD,
};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("invalid model: {0}")]
    Validation(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("policy does not match model: {0}")]
    PolicyMismatch(String),
}

/// Reads and parses a `.pomdp` file.
pub fn load_pomdp(path: impl AsRef<Path>) -> Result<PomdpModel, ModelIoError> {
    let text = std::fs::read_to_string(path)?;
    parse_pomdp(&text)
}

/// Writes a model to a `.pomdp` file.
pub fn save_pomdp(model: &PomdpModel, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pomdp(model, &mut w)?;
    w.flush()?;
    Ok(())
}
