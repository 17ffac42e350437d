//! Desk-scale, CPU-parallel pipeline for sampling-based GNN training.
//!
//! The crate wires together five stages that mirror a GPU mini-batch
//! trainer:
//!
//! * [`graph`]: CSR storage with an eager transpose, edge-list ingestion,
//!   binary persistence and synthetic generators.
//! * [`sampler`]: k-hop uniform neighbor sampling and random walks.
//! * [`fused_map`]: a lock-free open-addressing table that assigns
//!   consecutive local IDs while it is being built.
//! * [`scheduler`]: match degrees between batches, greedy reordering of a
//!   window and the overlap/load sets used to skip feature transfers.
//! * [`memsim`]: the two-level aggregation cost model and a host/device
//!   traffic simulator with a degree-ranked static cache.
//! * [`compute`]: tiled aggregation with an explicit scratch buffer, dense
//!   updates and the matching backward pass.
//! * [`trainer`]: a small GCN/GIN training loop over all of the above.

pub mod bench;
pub mod compute;
pub mod error;
pub mod fused_map;
pub mod graph;
pub mod memsim;
pub mod rng;
pub mod sampler;
pub mod scheduler;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{FeatureMatrix, Graph, GraphGenSpec, GraphModel, NodeId, SENTINEL};
