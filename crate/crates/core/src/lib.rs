//! Rank-modulated degree (RMD) graphs for graph-based learning on unbalanced,
//! proximal clusters.
//!
//! The pipeline is:
//!
//! 1. [`rank`]: estimate a density rank `R(x)` for every point from
//!    nearest-neighbor statistics, with half-split resampling.
//! 2. [`graph`]: connect every point to `k(λ + 2(1-λ)R(x))` nearest
//!    neighbors, which sparsifies low-density regions.
//! 3. [`spectral`] / [`ssl`]: RatioCut spectral clustering or harmonic label
//!    propagation on the resulting graph.
//! 4. [`select`]: choose `λ` by minimizing the cut subject to a minimum
//!    cluster size, and sweep that size to expose small clusters.
//!
//! [`theory`] holds analytic limit values used to validate the empirical
//! pipeline, and [`evaluate`] scores partitions against ground truth.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the CLI live
//! in the `rmdgraph` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod curve;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod graph;
pub mod linalg;
pub mod neighbors;
pub mod rank;
pub mod seed;
pub mod select;
pub mod spectral;
pub mod ssl;
pub mod theory;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use data::{Dataset, MixtureComponent, MixtureSpec};
pub use error::{Error, Result};
pub use graph::{DegreeProfile, Edge, Graph, GraphSpec, WeightScheme};
pub use rank::{RankVector, StatVariant};
pub use spectral::{CutReport, Hyperplane, Partition};
