pub mod amplitude;
pub mod boltzmann;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod graphs;
pub mod initial;
pub mod lattice;
pub mod mixture;
pub mod rng;
pub mod special;
pub mod stats;
pub mod wigner;

pub use error::{Error, Result};
