//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints its own PASS/FAIL line even when output is captured.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use uavfl::channel::link_sample;
use uavfl::cli::metrics_to_csv;
use uavfl::learning::{async_aggregate, staleness_weight, AsyncPolicy, ModelParams, ShapeSpec};
use uavfl::protocol::{
    collect_for_aggregation, compute_budget, final_upload, scheduled_epochs, try_opportunistic_transmit,
    uplink_latency, EntryKind, FinalOutcome, Mode, PayloadSizes, Scheme, ServerInbox, StaleQueue,
};
use uavfl::sim::{run_lane, run_simulation, LaneInput, RoundMetrics, SimConfig, Simulation};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------- 1

fn channel_oracle() -> Verdict {
    let start = Instant::now();
    let worst = common::channel_worst_errors(9001, 1000);
    let secs = start.elapsed().as_secs_f64();
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let (stage, _) = worst.iter().copied().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    verdict(max < 1e-9 && secs < 5.0, format!("1000 cases, worst rel err {max:.2e} ({stage}), {secs:.2}s"))
}

// ---------------------------------------------------------------- 2

fn gradients() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let worst = (0..50)
        .map(|_| {
            let (model, data) = common::random_problem(&mut rng);
            common::gradient_fd_error(&model, data.batch())
        })
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    verdict(worst < 1e-4 && secs < 30.0, format!("50 models, worst rel err {worst:.2e}, {secs:.2}s"))
}

// ---------------------------------------------------------------- 3

fn scalar(v: f64) -> ModelParams {
    ModelParams::from_values(ShapeSpec::mlp(1, &[], 1).unwrap(), vec![v, 0.0]).unwrap()
}

fn protocol_invariants() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    let expected: [&[usize]; 6] = [&[6], &[3, 6], &[2, 4, 6], &[2, 3, 5, 6], &[2, 3, 4, 5, 6], &[1, 2, 3, 4, 5, 6]];
    for (b, want) in (1..=6).zip(expected) {
        let got: Vec<usize> = scheduled_epochs(6, b).unwrap().into_iter().collect();
        check(got == want, &format!("schedule e=6 b={b}: {got:?}"));
    }
    check(compute_budget(3, 6, 8_000_000, 4e6).unwrap().extra_s == 4.0, "budget arithmetic");
    check(uplink_latency(Mode::Fl, 2, 4_000_000, 0, 2e6) == 4.0, "FL uplink latency");
    check(uplink_latency(Mode::Sl, 2, 4_000_000, 2_000_000, 2e6) == 5.0, "SL uplink latency");

    // randomized budget accounting
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..5000 {
        let e = rng.random_range(1..=12);
        let b = rng.random_range(1..=e);
        let bits = rng.random_range(1..10_000_000u64);
        let r0 = rng.random_range(1e2..1e8);
        let interrupt = rng.random_bool(0.5).then(|| rng.random_range(1..=e));
        let mut budget = compute_budget(b, e, bits, r0).unwrap();
        let allowance = budget.extra_s;
        let mut inbox = ServerInbox::new(1);
        let (mut spent, mut sent, mut last) = (0.0, 0u64, None);
        for t in scheduled_epochs(e, b).unwrap() {
            if t == e {
                continue;
            }
            let rate = if interrupt.is_some_and(|at| t >= at) { 0.0 } else { r0 * rng.random_range(0.0..4.0) };
            let out = try_opportunistic_transmit(&mut budget, &scalar(t as f64), rate, &mut inbox, 0, t, 1).unwrap();
            if budget.extra_s < 0.0 {
                check(false, &format!("case {case}: negative budget"));
            }
            if out.is_sent() {
                spent += bits as f64 / rate;
                sent += bits;
                last = Some(t);
            }
        }
        if spent > allowance + 1e-9 || sent + bits > b as u64 * bits || inbox.get(0).map(|x| x.epoch_tag) != last {
            check(false, &format!("case {case}: budget accounting"));
        }
    }

    // overwrite semantics
    let mut budget = compute_budget(4, 6, 100, 100.0).unwrap();
    let mut inbox = ServerInbox::new(2);
    let mut queue = StaleQueue::default();
    for t in [2, 3, 5] {
        let _ = try_opportunistic_transmit(&mut budget, &scalar(t as f64), 1e6, &mut inbox, 9, t, 2);
    }
    check(inbox.get(9).map(|x| x.epoch_tag) == Some(5), "latest intermediate wins");
    let mut cut_off = inbox.clone();
    let delivered = final_upload(9, &scalar(6.0), 6, 100, &mut inbox, &mut queue, false, Scheme::Opt);
    check(
        delivered == FinalOutcome::Delivered && inbox.get(9).map(|x| x.kind) == Some(EntryKind::Final),
        "final beats intermediate",
    );
    let kept = final_upload(9, &scalar(6.0), 6, 100, &mut cut_off, &mut queue, true, Scheme::Opt);
    let got = collect_for_aggregation(&mut cut_off, &mut queue, Scheme::Opt, 1);
    check(
        kept == FinalOutcome::IntermediateKept && got.timely.first().map(|u| u.params.values[0]) == Some(5.0),
        "intermediate survives interruption",
    );

    let detail = if failures.is_empty() {
        "schedules, arithmetic, 5000 random budgets, overwrite rules".to_string()
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty(), detail)
}

// ---------------------------------------------------------------- 4

fn degenerate_opt_equals_discard() -> Verdict {
    let start = Instant::now();
    let mut mismatched = Vec::new();
    for seed in 0..3 {
        let mut cfg = SimConfig { rounds: 20, num_uavs: 10, select_k: 5, b: 1, seed, ..SimConfig::default() };
        cfg.geometry.cell_radius_m = 150.0;
        cfg.mobility.interruption_prob = 0.0;
        let opt = metrics_to_csv(&run_simulation(&cfg).unwrap().metrics);
        cfg.scheme = Scheme::Discard;
        let discard = metrics_to_csv(&run_simulation(&cfg).unwrap().metrics);
        if opt != discard {
            mismatched.push(seed);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(mismatched.is_empty() && secs < 120.0, format!("3 seeds x 20 rounds, mismatched {mismatched:?}, {secs:.1}s"))
}

// ---------------------------------------------------------------- 5

fn split_equivalence() -> Verdict {
    let mut cfg = SimConfig { num_uavs: 10, select_k: 5, b: 1, ..SimConfig::default() };
    cfg.geometry.cell_radius_m = 150.0;
    cfg.mobility.interruption_prob = 0.0;
    let sim = Simulation::from_config(cfg.clone()).unwrap();
    let user = 3;
    let uav = &sim.fleet()[user];
    let partition = &sim.partitions()[uav.partition_id];
    let sizes: PayloadSizes = sim.payload_sizes(user);
    let trajectory = vec![uav.position; cfg.hyper.local_epochs];
    let k_db = 3.4;
    let link = link_sample(uav.position, cfg.geometry.bs_position(), k_db, cfg.bandwidth_share(), &cfg.channel).unwrap();
    let lane = |mode| {
        let input = LaneInput {
            user_id: user,
            round: 1,
            mode,
            global: sim.global(),
            partition,
            trajectory: &trajectory,
            k_db,
            interrupt_epoch: None,
            baseline_rate_bps: link.rate_bps,
            sizes,
        };
        run_lane(&cfg, &input).unwrap()
    };
    let (fl, sl) = (lane(Mode::Fl), lane(Mode::Sl));
    let identical = fl.trained.values.iter().zip(&sl.trained.values).all(|(a, b)| a.to_bits() == b.to_bits());
    let extra = sl.delivered_bits as i128 - fl.delivered_bits as i128;
    // SL uploads the UE-side prefix plus the activations; FL the whole model
    let expected = sizes.activation_bits as i128 - (sizes.full_model_bits as i128 - sizes.user_model_bits as i128);
    verdict(
        identical && extra > 0 && extra == expected,
        format!(
            "params bit-identical: {identical}; SL - FL = {extra} bits = m_a ({}) - (m_g - m_l) ({})",
            sizes.activation_bits,
            sizes.full_model_bits - sizes.user_model_bits
        ),
    )
}

// ---------------------------------------------------------------- 6-8, 10

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const TAU_GRID: [f64; 3] = [0.35, 0.4, 1000.0];

/// Desk-scale setting shared by the directional criteria.
fn desk(seed: u64) -> SimConfig {
    let mut cfg = SimConfig {
        rounds: 40,
        num_uavs: 10,
        select_k: 5,
        b: 2,
        tau_max_s: TAU_GRID[2],
        seed,
        ..SimConfig::default()
    };
    cfg.hyper.learning_rate = 0.05;
    cfg.geometry.cell_radius_m = 150.0;
    cfg.mobility.interruption_prob = 0.3;
    cfg.mobility.sl_fraction = 0.0;
    cfg
}

fn variant(name: &str, seed: u64) -> SimConfig {
    let mut cfg = desk(seed);
    match name {
        "opt b=2" => {}
        "opt b=3" => cfg.b = 3,
        "async" => (cfg.scheme, cfg.b) = (Scheme::Async, 1),
        "discard" => (cfg.scheme, cfg.b) = (Scheme::Discard, 1),
        "tau=0.35" => cfg.tau_max_s = TAU_GRID[0],
        "tau=0.4" => cfg.tau_max_s = TAU_GRID[1],
        other => unreachable!("{other}"),
    }
    cfg
}

struct Run {
    name: &'static str,
    seed: u64,
    metrics: Vec<RoundMetrics>,
}

fn desk_runs(names: &[&'static str]) -> Vec<Run> {
    let jobs: Vec<(&'static str, u64)> = names.iter().flat_map(|&n| SEEDS.map(|s| (n, s))).collect();
    jobs.par_iter()
        .map(|&(name, seed)| Run { name, seed, metrics: run_simulation(&variant(name, seed)).unwrap().metrics })
        .collect()
}

fn mean_of(runs: &[Run], name: &str, f: impl Fn(&[RoundMetrics]) -> f64) -> f64 {
    let picked: Vec<f64> = runs.iter().filter(|r| r.name == name).map(|r| f(&r.metrics)).collect();
    picked.iter().sum::<f64>() / picked.len() as f64
}

fn final_accuracy(m: &[RoundMetrics]) -> f64 {
    m.last().map_or(0.0, |r| r.test_accuracy)
}

fn mean_overhead(m: &[RoundMetrics]) -> f64 {
    uavfl::sim::average_comm_overhead(m).unwrap()
}

fn mean_selected(m: &[RoundMetrics]) -> f64 {
    m.iter().map(|r| r.num_selected as f64).sum::<f64>() / m.len() as f64
}

fn accuracy_ordering(runs: &[Run], secs: f64) -> Verdict {
    let opt = mean_of(runs, "opt b=2", final_accuracy);
    let asy = mean_of(runs, "async", final_accuracy);
    let dis = mean_of(runs, "discard", final_accuracy);
    let gap = 100.0 * (opt - dis);
    verdict(
        opt > asy && asy > dis && gap >= 3.0 && secs < 900.0,
        format!("final accuracy opt {opt:.4} > async {asy:.4} > discard {dis:.4}, gap {gap:.2} pp, {secs:.0}s"),
    )
}

fn overhead_scaling(runs: &[Run]) -> Verdict {
    // b = 1 under opt is the discard run (criterion 4)
    let o: Vec<f64> = ["discard", "opt b=2", "opt b=3"].iter().map(|n| mean_of(runs, n, mean_overhead)).collect();
    let ratio = o[1] / o[0];
    verdict(
        o[0] <= o[1] && o[1] <= o[2] && (1.5..=2.8).contains(&ratio),
        format!("mean MB/round b=1 {:.5}, b=2 {:.5}, b=3 {:.5}; b2/b1 = {ratio:.3}", o[0], o[1], o[2]),
    )
}

fn tau_screening(runs: &[Run]) -> Verdict {
    let names = ["tau=0.35", "tau=0.4", "opt b=2"];
    let sel: Vec<f64> = names.iter().map(|n| mean_of(runs, n, mean_selected)).collect();
    let ovh: Vec<f64> = names.iter().map(|n| mean_of(runs, n, mean_overhead)).collect();
    let weakly_up = |v: &[f64]| v.windows(2).all(|w| w[0] <= w[1]);
    verdict(
        weakly_up(&sel) && weakly_up(&ovh),
        format!("tau {TAU_GRID:?}: selected {sel:.3?}, MB/round {ovh:.5?}"),
    )
}

fn determinism(runs: &[Run]) -> Verdict {
    let names = ["opt b=2", "async", "discard", "tau=0.4"];
    let mut differing = Vec::new();
    for name in names {
        let first = runs.iter().find(|r| r.name == name && r.seed == 0).unwrap();
        let again = run_simulation(&variant(name, 0)).unwrap().metrics;
        if metrics_to_csv(&first.metrics) != metrics_to_csv(&again) {
            differing.push(name);
        }
    }
    verdict(differing.is_empty(), format!("reran {names:?} at seed 0, differing {differing:?}"))
}

// ---------------------------------------------------------------- 9

fn async_weighting() -> Verdict {
    let policy = AsyncPolicy { alpha: 0.4, exponent_a: 0.5, max_delay: 1 };
    let w = staleness_weight(1, &policy);
    let w_ref = 0.4 / 2f64.sqrt();
    let shape = ShapeSpec::mlp(1, &[], 2).unwrap();
    let a = ModelParams::from_values(shape.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let b = ModelParams::from_values(shape.clone(), vec![3.0, -2.0, 0.5, 0.0]).unwrap();
    let c = ModelParams::from_values(shape, vec![10.0, 6.0, -4.0, 8.0]).unwrap();
    let got = async_aggregate(&[&a, &b], &[(&c, 1)], &policy).unwrap();
    // (a + b + w c) / (2 + w), written out per coordinate
    let want = [
        (1.0 + 3.0 + w_ref * 10.0) / (2.0 + w_ref),
        (2.0 - 2.0 + w_ref * 6.0) / (2.0 + w_ref),
        (3.0 + 0.5 - w_ref * 4.0) / (2.0 + w_ref),
        (4.0 + 0.0 + w_ref * 8.0) / (2.0 + w_ref),
    ];
    let err = got.values.iter().zip(want).map(|(g, x)| (g - x).abs()).fold(0.0, f64::max);
    let weight_err = (w - w_ref).abs();
    verdict(
        weight_err < 1e-12 && err < 1e-12,
        format!("weight {w:.15} (err {weight_err:.1e}), fixture max err {err:.1e}"),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Verdict)> = vec![
        (1, "channel oracle", channel_oracle()),
        (2, "gradient finite differences", gradients()),
        (3, "protocol invariants", protocol_invariants()),
        (4, "opt(b=1, p=0) equals discard", degenerate_opt_equals_discard()),
        (5, "split-learning equivalence", split_equivalence()),
    ];

    let desk_start = Instant::now();
    let runs = desk_runs(&["opt b=2", "async", "discard"]);
    let secs = desk_start.elapsed().as_secs_f64();
    results.push((6, "accuracy ordering at desk scale", accuracy_ordering(&runs, secs)));
    let mut runs = runs;
    runs.extend(desk_runs(&["opt b=3", "tau=0.35", "tau=0.4"]));
    results.push((7, "overhead scaling in b", overhead_scaling(&runs)));
    results.push((8, "tau_max screening", tau_screening(&runs)));
    results.push((9, "async staleness weighting", async_weighting()));
    results.push((10, "determinism", determinism(&runs)));

    let mut failed = 0;
    for (n, name, v) in &results {
        println!("criterion {n:>2} [{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed, {:.0}s", results.len() - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
