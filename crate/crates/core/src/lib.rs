//! Resistive networks and reversible Markov chains solved through spanning
//! tree and separating forest expansions.
//!
//! Every quantity has three routes: exact enumeration over trees or forests
//! (desk-sized networks), Monte Carlo averages over sampled trees or forests,
//! and a dense linear-algebra oracle in [`oracle`] that shares no code with
//! either.

pub mod enumeration;
pub mod error;
pub mod estimate;
pub mod markov;
pub mod network;
pub mod oracle;
pub mod sampler;
pub mod stats;
pub mod theorems;

pub use enumeration::{Forest, Orchard, Tree};
pub use error::{Error, Result};
pub use estimate::{EstimateReport, McConfig, Shape};
pub use markov::{to_markov_chain, Chain, FlowMatrix};
pub use network::{build_network, BoundaryCondition, ContractionMap, FixedVoltages, InjectedCurrents, Network};
pub use oracle::{CurrentMatrix, VoltageVector};
pub use sampler::SamplerConfig;
