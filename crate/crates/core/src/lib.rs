//! Consensus solvability under message adversaries: process-time graphs,
//! view distances, component analysis and a synthesized consensus algorithm.

pub mod consensus;
pub mod error;
pub mod fixtures;
pub mod metrics;
pub mod model;
pub mod ptgraph;
pub mod topology;

pub use error::{Error, Result};
pub use model::{validate_spec, AdversarySpec, GraphWord, PrefixPoint, ProcessId, ValidatedAdversary, Value};
