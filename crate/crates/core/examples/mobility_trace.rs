//! A small fleet flying random waypoints for one round: position, distance
//! to the base station and uplink rate after every local epoch, plus the
//! per-round interruption draw.
//!
//! Run with `cargo run --example mobility_trace`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use uavfl::channel::{distance, link_sample, ChannelEnvironment};
use uavfl::mobility::{
    init_fleet, resample_k, sample_interruption, sample_interruption_epoch, step_position, CellGeometry, FleetSpec,
};

fn main() -> uavfl::Result<()> {
    let geometry = CellGeometry { cell_radius_m: 150.0, ..CellGeometry::default() };
    let spec = FleetSpec {
        num_uavs: 3,
        speed_mps: 10.0,
        sl_fraction: 0.34,
        compute_s_per_sample: 1e-4,
        limited_compute_s_per_sample: 4e-4,
        k_min_db: 1.8,
        k_max_db: 5.0,
    };
    let env = ChannelEnvironment::default();
    let bs = geometry.bs_position();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fleet = init_fleet(&spec, &geometry, &mut rng);
    let epochs = 6;
    let dt = 1.5;

    for uav in fleet {
        let k_db = resample_k(&mut rng, spec.k_min_db, spec.k_max_db);
        let cut = sample_interruption(&mut rng, 0.3).then(|| sample_interruption_epoch(&mut rng, epochs));
        println!(
            "UAV {} ({}), K = {k_db:.2} dB, link lost from epoch {}",
            uav.id,
            if uav.sl_required { "split learning" } else { "federated" },
            cut.map_or("never".to_string(), |t| t.to_string())
        );
        let mut state = uav;
        for t in 1..=epochs {
            state = step_position(&state, &geometry, dt, &mut rng);
            let p = state.position;
            let rate = if cut.is_some_and(|c| c <= t) { 0.0 } else { link_sample(p, bs, k_db, 0.2, &env)?.rate_bps };
            println!(
                "  epoch {t}: ({:7.1}, {:7.1}, {:5.1}) m, {:6.1} m from BS, {rate:10.3e} bps",
                p.x,
                p.y,
                p.z,
                distance(p, bs)
            );
        }
    }
    Ok(())
}
