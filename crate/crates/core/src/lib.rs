//! Closest separable states, relative entropy of entanglement and thermal
//! behaviour of cluster states on bipartite qubit graphs.

pub mod divergence;
pub mod error;
pub mod graph;
pub mod rng;
pub mod separable;
pub mod tensor;
pub mod thermal;

pub use error::{Error, Result};
