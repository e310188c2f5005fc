//! Weaving optical frequency combs into continuous-variable hypercubic
//! cluster states.
//!
//! The pipeline runs from OPO pump indices to the H-graph of two-mode
//! squeezing interactions ([`hgraph`]), through the macronode-local
//! Hadamard interferometer ([`interferometer`]), to the Gaussian graph state
//! and its nullifier statistics ([`gaussian`]), and finally checks the
//! macronode lattice ([`lattice`]). [`pipeline`] strings the stages together
//! from a config file and [`export`] writes the results.

pub mod comb;
pub mod config;
pub mod error;
pub mod export;
pub mod gaussian;
pub mod hgraph;
pub mod interferometer;
pub mod lattice;
pub mod mtx;
pub mod pipeline;
pub mod sparse;

pub use error::{Error, Result};
