pub mod action;
pub mod baselines;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod graph;
pub mod io;
pub mod laplacian;
pub mod metrics;
pub mod oracle;
pub mod reducer;
pub mod rng;
pub mod sketch;

pub use error::{Error, Result};
