pub mod config;
pub mod design;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod selection;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
