//! Configuration files, dataset ingestion, and the artifacts written by the
//! `uavfl` binary.

pub mod commands;
pub mod config;
pub mod mnist;
pub mod svg;

pub use commands::{
    cmd_chart, cmd_compare, cmd_simulate, exit_code, metrics_to_csv, parse_metrics_csv, parse_sweep_csv, CompareReport,
    ExperimentSpec, Summary, SweepAxis, SweepRow,
};
pub use config::{parse_config, parse_config_text, serialize_config};
pub use mnist::ingest_mnist;
pub use svg::{emit_svg_chart, render_svg, Series};
