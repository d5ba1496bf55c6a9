//! Collapsed stochastic block model.
//!
//! The block parameters and the cluster proportions are integrated out
//! analytically, which leaves a closed-form posterior over the cluster
//! assignment `z` and the number of clusters `K`. This crate contains the
//! pure algorithmic parts of the system:
//!
//! * [`graph`]: immutable sparse networks and the edge-list text format
//! * [`posterior`]: the collapsed log posterior and incremental block statistics
//! * [`sampler`]: the four-move allocation sampler (MK, GS, M3, AE)
//! * [`relabel`]: online label unswitching and membership summaries
//! * [`diagnostics`]: posterior summaries over `K`, IAT, `P(x)` estimates and
//!   the exact enumeration oracle for small networks
//! * [`synthgen`]: synthetic networks drawn from the generative model
//!
//! The crate is `no_std` and only needs an allocator. File IO, trace
//! formats and the command-line driver live in the `sbm` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod assignment;
pub mod diagnostics;
pub mod graph;
pub mod math;
pub mod posterior;
pub mod relabel;
pub mod sampler;
pub mod synthgen;

pub use graph::{EdgeModel, GraphError, GraphKind, Network};
pub use posterior::{ClusterState, Hyperparameters, KPrior};
pub use sampler::{Chain, ChainSample, MoveKind, MoveStats, SamplerConfig};
