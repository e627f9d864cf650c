//! Quantization-based global optimization with annealing baselines,
//! quantized gradient methods and an experiment harness.

pub mod benchfns;
pub mod error;
pub mod gradopt;
pub mod harness;
pub mod metaheur;
pub mod quantize;
pub mod schedule;
pub mod theory;
pub mod tsp;

pub use error::{Error, Result};
