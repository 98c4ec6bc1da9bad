//! Topology maintenance for mobile multi-robot networks with delayed,
//! range-limited communication.
//!
//! A team of agents tracks reference trajectories under bounded disturbance
//! while a central node decides, from delayed position reports only, which
//! maintained links to drop and which to form so that the network stays
//! connected, keeps its hop diameter under a bound, and pays as little as
//! possible for stretched links.
//!
//! The crate is organized bottom-up:
//!
//! - [`graph`]: hop-distance bookkeeping (shortest paths, path counts,
//!   eccentricities, spectral connectivity) with incremental cache updates.
//! - [`dynamics`]: agent motion, tracking policies, and the disturbance
//!   propagation bound used for position uncertainty.
//! - [`comms`]: broadcast messages, per-agent knowledge bases, and the
//!   delay model.
//! - [`estimation`]: particle uncertainty regions for one-hop and relayed
//!   reports, and the Monte-Carlo link risk/cost/confidence scores.
//! - [`decision`]: the central node's delete/add/re-elect procedure.
//! - [`baselines`]: idealized spanning-tree planners and the fixed-leader
//!   variant used for comparison.
//! - [`scenario`], [`sim`], [`metrics`], [`plot`]: reproducible scenario
//!   configuration, the discrete-time engine, run metrics, and data/SVG
//!   emission.

pub mod baselines;
pub mod comms;
pub mod decision;
pub mod dynamics;
pub mod estimation;
pub mod graph;
pub mod metrics;
pub mod plot;
pub mod scenario;
pub mod sim;
pub mod stats;

mod error;
mod rng;

pub use error::{Error, Result};
pub use rng::derive_seed;

/// Cartesian position or velocity. Planar scenarios keep `z = 0`.
pub type Point = nalgebra::Vector3<f64>;
