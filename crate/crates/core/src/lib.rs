//! Hybrid Bayesian networks with discrete and conditional linear Gaussian nodes.
//!
//! - [`graph`]: DAGs, topological order, d-separation, DOT export.
//! - [`model`]: networks, joint log-density, forward sampling, model files.
//! - [`data`]: typed CSV ingestion, summaries, correlations, binarization.
//! - [`fit`]: maximum-likelihood fitting and BIC family scores.
//! - [`learn`]: BIC hill climbing with restarts and edge constraints.
//! - [`infer`]: exact enumeration, rejection sampling, likelihood weighting.
//! - [`fixtures`]: the bundled driver mental-state network.
//!
//! All randomness comes from ChaCha8 generators keyed by an explicit seed.

pub mod cli;
pub mod data;
pub mod fit;
pub mod fixtures;
pub mod graph;
pub mod infer;
pub mod learn;
pub mod model;

pub use data::{ColumnSchema, Dataset, Role};
pub use graph::{Dag, NodeId};
pub use model::{Assignment, Network, VariableKind, VariableSpec};
