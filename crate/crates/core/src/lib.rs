//! Simulation engine for entanglement distribution networks.
//!
//! Channels carry an additive decibel cost vector (transmission loss,
//! dephasing) instead of quantum state; entanglement swapping adds costs in
//! series, purification combines them in parallel. On top of that algebra sit
//! a multigraph network model, graph reduction, greedy multipath routing,
//! temporal (time-expanded) routing with quantum memories, a Monte-Carlo
//! benchmark harness and a satellite link model.

pub mod bench;
pub mod cost;
mod error;
pub mod graph;
pub mod reduction;
pub mod routing;
pub mod satellite;
pub mod temporal;

pub use error::{Error, Result};
