//! Link budget across the cell: elevation, LOS probability, path loss,
//! gain and uplink rate for a UAV at increasing horizontal distance, and
//! the FL upload time of a small model at that rate.
//!
//! Run with `cargo run --example channel_link_budget`.

use uavfl::channel::{link_sample, ChannelEnvironment, Position};
use uavfl::units::linear_to_db;

fn main() -> uavfl::Result<()> {
    let env = ChannelEnvironment::default();
    let bs = Position::new(0.0, 0.0, 20.0);
    let share = 1.0 / 10.0;
    let k_db = 3.4;
    // 20 -> 32 -> 10 MLP, 4 bytes per parameter
    let model_bits = 1002.0 * 32.0;

    println!("bandwidth share {share}, K = {k_db} dB, model {model_bits} bits");
    println!("{:>8} {:>8} {:>8} {:>7} {:>10} {:>11} {:>13} {:>10}", "r_m", "alt_m", "elev", "p_los", "PL_dB", "gain_dB", "rate_bps", "upload_s");
    for alt in [50.0, 80.0] {
        for r in [0.0, 25.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 400.0, 500.0] {
            let s = link_sample(Position::new(r, 0.0, alt), bs, k_db, share, &env)?;
            let upload = if s.rate_bps > 0.0 { model_bits / s.rate_bps } else { f64::INFINITY };
            println!(
                "{r:>8.0} {alt:>8.0} {:>8.2} {:>7.4} {:>10.2} {:>11.2} {:>13.4e} {:>10.3e}",
                s.elevation_deg,
                s.p_los,
                s.path_loss_dbm,
                linear_to_db(s.gain),
                s.rate_bps,
                upload
            );
        }
    }
    Ok(())
}
