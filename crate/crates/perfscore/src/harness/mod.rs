//! Experiment drivers and their tabular output.

mod counterexample;
mod emit;
mod experiments;
mod records;
mod stats;

pub use counterexample::*;
pub use emit::*;
pub use experiments::*;
pub use records::*;
pub use stats::*;
