//! Sweeps the number of uploads per round over a few seeds, writes the
//! per-cell CSVs, the seed-averaged curves and an SVG chart, then redraws
//! the summary table as a second chart.
//!
//! Run with `cargo run --release --example sweep_and_chart [out_dir]`.

use uavfl::cli::{cmd_chart, cmd_compare, ExperimentSpec, SweepAxis};
use uavfl::sim::SimConfig;

fn main() -> uavfl::Result<()> {
    let out_dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("uavfl-sweep"), Into::into);
    let mut base = SimConfig { rounds: 15, num_uavs: 10, select_k: 5, ..SimConfig::default() };
    base.hyper.learning_rate = 0.05;
    base.geometry.cell_radius_m = 150.0;
    base.mobility.sl_fraction = 0.0;

    let spec = ExperimentSpec {
        base,
        axis: SweepAxis::B,
        values: vec!["1".into(), "2".into(), "3".into()],
        seeds: vec![0, 1],
        out_dir: out_dir.clone(),
    };
    let report = cmd_compare(&spec)?;
    for row in &report.rows {
        println!("b={} seed={}: accuracy {:.3}, {:.4} MB/round", row.value, row.seed, row.final_accuracy, row.mean_overhead_mb);
    }
    cmd_chart(&out_dir.join("sweep.csv"), &out_dir.join("sweep.svg"))?;
    println!("wrote {}", out_dir.display());
    Ok(())
}
