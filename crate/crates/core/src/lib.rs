//! Deterministic simulation of federated learning over a dynamic
//! UAV-to-base-station wireless network.
//!
//! The crate models the air-to-ground link chain ([`channel`]), UAV motion
//! and link dynamics ([`mobility`]), a from-scratch MLP with exact
//! backpropagation and aggregation rules ([`learning`]), latency screening
//! and opportunistic intermediate-model transmission ([`protocol`]), and a
//! round-by-round orchestrator ([`sim`]). [`cli`] holds configuration
//! parsing, dataset ingestion and the CSV/JSON/SVG emitters used by the
//! `uavfl` binary.

pub mod channel;
pub mod cli;
pub mod error;
pub mod learning;
pub mod mobility;
pub mod protocol;
pub mod rng;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
