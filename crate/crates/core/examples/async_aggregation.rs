//! Staleness weights and how an update that missed its round is blended
//! into the next aggregate.
//!
//! Run with `cargo run --example async_aggregation`.

use uavfl::learning::{async_aggregate, fedavg, staleness_weight, AsyncPolicy, ModelParams, ShapeSpec};

fn main() -> uavfl::Result<()> {
    let policy = AsyncPolicy { max_delay: 4, ..AsyncPolicy::default() };
    for delay in 0..=4 {
        println!("delay {delay}: weight {:.6}", staleness_weight(delay, &policy));
    }

    let shape = ShapeSpec::mlp(1, &[], 1)?;
    let point = |w: f64, b: f64| ModelParams::from_values(shape.clone(), vec![w, b]);
    let (a, b, late) = (point(1.0, 0.0)?, point(3.0, 1.0)?, point(10.0, 5.0)?);
    println!("on-time only:          {:?}", fedavg(&[&a, &b])?.values);
    for delay in [0, 1, 3] {
        let mixed = async_aggregate(&[&a, &b], &[(&late, delay)], &policy)?;
        println!("with late update d={delay}: {:?}", mixed.values);
    }
    let too_old = async_aggregate(&[&a], &[(&late, 5)], &policy);
    println!("delay 5 beyond max_delay: {}", too_old.unwrap_err());
    Ok(())
}
