//! Independent reference implementations used by several test targets.
//!
//! Every formula here takes a different numerical route from the library
//! (hypot/atan2 geometry, natural-log power conversions, a series for
//! `ln(1 + x)` at small `x`), so agreement is evidence rather than tautology.

#![allow(dead_code)]

use std::f64::consts::{LN_10, LN_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uavfl::channel::{
    channel_gain, distance as lib_distance, elevation_angle_deg, link_sample, los_probability, path_loss_dbm,
    rician_amplitudes, transmission_rate_bps, ChannelEnvironment, Position,
};
use uavfl::learning::{cross_entropy_loss, gradient, init_model, Batch, Dataset, ModelParams, ShapeSpec};
use uavfl::units::db_to_linear;

pub const C: f64 = 299_792_458.0;

pub struct Env {
    pub a0: f64,
    pub b0: f64,
    pub eta_l: f64,
    pub eta_n: f64,
    pub f: f64,
    pub exponent: f64,
}

pub fn distance(u: [f64; 3], b: [f64; 3]) -> f64 {
    (u[0] - b[0]).hypot(u[1] - b[1]).hypot(u[2] - b[2])
}

pub fn elevation_deg(u: [f64; 3], b: [f64; 3]) -> f64 {
    let horizontal = (u[0] - b[0]).hypot(u[1] - b[1]);
    (u[2] - b[2]).abs().atan2(horizontal) * 180.0 / PI
}

pub fn p_los(theta: f64, e: &Env) -> f64 {
    // logistic in log space: a0·exp(−b0(θ − a0)) = exp(ln a0 − b0(θ − a0))
    let z = e.a0.ln() - e.b0 * (theta - e.a0);
    if z > 0.0 {
        let t = (-z).exp();
        t / (t + 1.0)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

pub fn path_loss(p: f64, d: f64, e: &Env) -> f64 {
    let log10 = |x: f64| x.ln() / LN_10;
    -(e.eta_l - e.eta_n) / p - 20.0 * (log10(4.0 * PI) + e.exponent * log10(d) + log10(e.f) - log10(C)) - e.eta_n
}

pub fn amplitudes(k: f64) -> (f64, f64) {
    ((1.0 / (1.0 + 1.0 / k)).sqrt(), (0.5 / (k + 1.0)).sqrt())
}

pub fn db_to_lin(db: f64) -> f64 {
    (db * LN_10 / 10.0).exp()
}

pub fn gain(pl: f64, k: f64) -> f64 {
    let (v, s) = amplitudes(k);
    db_to_lin(pl) * (v + s)
}

/// `ln(1 + x)`, by series below 1e-3 and directly above.
pub fn ln1p(x: f64) -> f64 {
    if x < 1e-3 {
        let mut term = x;
        let mut sum = 0.0;
        let mut k = 1.0;
        while term.abs() > 1e-300 && k < 60.0 {
            sum += term / k;
            term *= -x;
            k += 1.0;
        }
        sum
    } else {
        (1.0 + x).ln()
    }
}

pub fn rate(n: f64, bw: f64, g: f64, p_dbm: f64, noise_dbm_per_hz: f64) -> f64 {
    let p_mw = db_to_lin(p_dbm);
    let noise_mw = db_to_lin(noise_dbm_per_hz) * n * bw;
    n * bw * ln1p(g * p_mw / noise_mw) / LN_2
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Small random MLP with a random batch for gradient checks.
pub fn random_problem(rng: &mut ChaCha8Rng) -> (ModelParams, Dataset) {
    let input = rng.random_range(2..=6);
    let classes = rng.random_range(2..=5);
    let hidden: Vec<usize> = (0..rng.random_range(0..=2)).map(|_| rng.random_range(2..=7)).collect();
    let shape = ShapeSpec::mlp(input, &hidden, classes).unwrap();
    let mut model = init_model(&shape, rng);
    // push biases away from zero so every term is exercised
    for v in &mut model.values {
        *v += rng.random_range(-0.3..0.3);
    }
    let batch = rng.random_range(1..=6);
    let features = (0..batch * input).map(|_| rng.random_range(-1.5..1.5)).collect();
    let labels = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    (model, Dataset::new(features, labels, input, classes).unwrap())
}

/// Worst relative disagreement between the analytic gradient and central
/// differences of the loss, with an absolute floor for tiny entries.
pub fn gradient_fd_error(model: &ModelParams, batch: Batch<'_>) -> f64 {
    let analytic = gradient(model, batch).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut probe = model.clone();
    for i in 0..model.len() {
        let orig = probe.values[i];
        probe.values[i] = orig + h;
        let up = cross_entropy_loss(&probe, batch).unwrap();
        probe.values[i] = orig - h;
        let down = cross_entropy_loss(&probe, batch).unwrap();
        probe.values[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-4);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

pub fn oracle_env(env: &ChannelEnvironment) -> Env {
    Env {
        a0: env.a0,
        b0: env.b0,
        eta_l: env.eta_los_db,
        eta_n: env.eta_nlos_db,
        f: env.carrier_hz,
        exponent: env.fspl_exponent,
    }
}

pub struct Case {
    pub uav: Position,
    pub bs: Position,
    pub k_db: f64,
    pub n: f64,
    pub env: ChannelEnvironment,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let r = 500.0 * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    let uav = Position::new(r * phi.cos(), r * phi.sin(), rng.random_range(20.0..=80.0));
    let bs = Position::new(0.0, 0.0, rng.random_range(0.0..20.0));
    let env = ChannelEnvironment {
        a0: rng.random_range(1.0..15.0),
        b0: rng.random_range(0.05..0.6),
        eta_los_db: rng.random_range(0.0..30.0),
        eta_nlos_db: rng.random_range(0.0..30.0),
        carrier_hz: rng.random_range(0.5e9..6e9),
        fspl_exponent: if rng.random::<bool>() { 2.0 } else { 1.0 },
        ..ChannelEnvironment::default()
    };
    Case { uav, bs, k_db: rng.random_range(1.8..=5.0), n: rng.random_range(0.05..=1.0), env }
}

fn arr(p: Position) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Worst relative error per channel stage over `cases` random inputs.
pub fn channel_worst_errors(seed: u64, cases: usize) -> [(&'static str, f64); 7] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 7];
    for _ in 0..cases {
        let c = random_case(&mut rng);
        let o = oracle_env(&c.env);
        let d = lib_distance(c.uav, c.bs);
        let d_ref = distance(arr(c.uav), arr(c.bs));
        worst[0] = worst[0].max(rel_err(d, d_ref));

        let theta = elevation_angle_deg(c.uav, c.bs).unwrap();
        worst[1] = worst[1].max(rel_err(theta, elevation_deg(arr(c.uav), arr(c.bs))));

        let p = los_probability(theta, &c.env);
        worst[2] = worst[2].max(rel_err(p, p_los(theta, &o)));

        let pl = path_loss_dbm(p, d, &c.env).unwrap();
        worst[3] = worst[3].max(rel_err(pl, path_loss(p, d, &o)));

        let k = db_to_linear(c.k_db);
        let (v, s) = rician_amplitudes(k).unwrap();
        let (v_ref, s_ref) = amplitudes(k);
        worst[4] = worst[4].max(rel_err(v, v_ref)).max(rel_err(s, s_ref));

        let g = channel_gain(pl, k).unwrap();
        worst[5] = worst[5].max(rel_err(g, gain(pl, k)));

        let r = transmission_rate_bps(c.n, c.env.uav_bandwidth_hz, g, c.env.uav_power_dbm, -174.0);
        let r_ref = rate(c.n, c.env.uav_bandwidth_hz, g, c.env.uav_power_dbm, -174.0);
        worst[6] = worst[6].max(rel_err(r, r_ref));

        // the composed sample must agree with the staged computation too
        let sample = link_sample(c.uav, c.bs, c.k_db, c.n, &c.env).unwrap();
        worst[6] = worst[6].max(rel_err(sample.rate_bps, r_ref));
    }
    let names = ["distance", "elevation", "p_los", "path_loss", "amplitudes", "gain", "rate"];
    std::array::from_fn(|i| (names[i], worst[i]))
}

