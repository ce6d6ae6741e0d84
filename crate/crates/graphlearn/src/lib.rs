pub mod error;
pub mod experiment;
pub mod features;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
