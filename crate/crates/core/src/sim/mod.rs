//! End-to-end simulation: configuration, the round engine and metrics.

pub mod config;
pub mod engine;
pub mod metrics;

pub use config::{AggregateRule, BandwidthSplit, DatasetConfig, DatasetSource, MobilityConfig, ModelConfig, SimConfig};
pub use engine::{
    load_datasets, run_lane, run_simulation, run_simulation_with_data, LaneInput, LaneOutcome, Simulation,
    SimulationResult,
};
pub use metrics::{average_comm_overhead, RoundMetrics};
