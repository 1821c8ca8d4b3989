//! One user's round driven by hand: the latency budget bought by `b`, the
//! scheduled epochs, opportunistic uploads that fit (or do not fit) the
//! remaining budget, an interruption before the final upload, and what
//! the server ends up aggregating.
//!
//! Run with `cargo run --example opportunistic_round`.

use uavfl::learning::{ModelParams, ShapeSpec};
use uavfl::protocol::{
    collect_for_aggregation, compute_budget, final_upload, scheduled_epochs, try_opportunistic_transmit, Scheme,
    ServerInbox, StaleQueue,
};

fn main() -> uavfl::Result<()> {
    let shape = ShapeSpec::mlp(2, &[], 2)?;
    let after_epoch = |t: usize| ModelParams::from_values(shape.clone(), vec![t as f64; 6]);
    let (e, b, bits, r0) = (6, 4, 1_000_000u64, 2e6);
    let round = 1;

    let mut budget = compute_budget(b, e, bits, r0)?;
    let schedule = scheduled_epochs(e, b)?;
    println!("b = {b}: spare uplink time {:.3} s, scheduled epochs {schedule:?}", budget.extra_s);

    // the link fades during the round and drops before the last epoch
    let rates = [0.0, 2.5e6, 0.6e6, 0.0, 2.2e6, 0.0];
    let mut inbox = ServerInbox::new(round);
    let mut stale = StaleQueue::default();
    for &t in schedule.iter().filter(|&&t| t < e) {
        let out = try_opportunistic_transmit(&mut budget, &after_epoch(t)?, rates[t - 1], &mut inbox, 0, t, round)?;
        println!("epoch {t}: rate {:.1e} bps -> {out:?}, spare now {:.3} s", rates[t - 1], budget.extra_s);
    }

    let outcome = final_upload(0, &after_epoch(e)?, e, bits, &mut inbox, &mut stale, true, Scheme::Opt);
    println!("final upload interrupted -> {outcome:?}");
    let collected = collect_for_aggregation(&mut inbox, &mut stale, Scheme::Opt, 1);
    for u in &collected.timely {
        println!("server aggregates user {} from epoch {} ({:?})", u.user_id, u.epoch_tag, u.kind);
    }
    Ok(())
}
