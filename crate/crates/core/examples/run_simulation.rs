//! A desk-scale experiment: 10 UAVs, 5 selected per round, 30% chance of
//! losing the link mid-round. Prints the learning curve of the
//! opportunistic scheme next to the scheme that drops interrupted users.
//!
//! Run with `cargo run --release --example run_simulation`.

use uavfl::protocol::Scheme;
use uavfl::sim::{average_comm_overhead, run_simulation, SimConfig};

fn desk(scheme: Scheme, b: usize) -> SimConfig {
    let mut cfg = SimConfig { rounds: 40, num_uavs: 10, select_k: 5, scheme, b, seed: 1, ..SimConfig::default() };
    cfg.hyper.learning_rate = 0.05;
    cfg.geometry.cell_radius_m = 150.0;
    cfg.mobility.sl_fraction = 0.0;
    cfg
}

fn main() -> uavfl::Result<()> {
    let opt = run_simulation(&desk(Scheme::Opt, 2))?.metrics;
    let discard = run_simulation(&desk(Scheme::Discard, 1))?.metrics;
    println!("{:>5} {:>10} {:>10} {:>6} {:>6}", "round", "opt acc", "drop acc", "inter", "lost");
    for (o, d) in opt.iter().zip(&discard) {
        if o.round_index % 5 == 0 {
            println!(
                "{:>5} {:>10.3} {:>10.3} {:>6} {:>6}",
                o.round_index, o.test_accuracy, d.test_accuracy, o.num_intermediate_used, o.num_interrupted
            );
        }
    }
    println!(
        "mean uplink MB per round: opt {:.4}, discard {:.4}",
        average_comm_overhead(&opt)?,
        average_comm_overhead(&discard)?
    );
    Ok(())
}
