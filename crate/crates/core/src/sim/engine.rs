//! Round orchestration: link measurement, screening, per-user training
//! lanes with opportunistic uploads, aggregation and evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AggregateRule, DatasetSource, SimConfig};
use super::metrics::RoundMetrics;
use crate::channel::{link_sample, Position};
use crate::cli::mnist::ingest_mnist;
use crate::error::{Error, Result};
use crate::learning::aggregate::async_aggregate_weighted;
use crate::learning::{
    evaluate, fedavg, fedavg_weighted, gaussian_blobs, init_model, local_train_epoch, local_train_epoch_split,
    partition, Dataset, ModelParams, ShapeSpec,
};
use crate::mobility::{
    init_fleet, resample_k, sample_interruption, sample_interruption_epoch, step_position, UavState,
};
use crate::protocol::{
    activation_bits, collect_for_aggregation, compute_budget, final_upload, one_round_latency,
    select_users, try_opportunistic_transmit, Candidate, EntryKind, FinalOutcome, LinkRates, Mode, PayloadSizes,
    RoundWorkload, Scheme, ServerInbox, StaleQueue, TransmitOutcome,
};
use crate::rng::{rng_substream, Domain};
use crate::units::BITS_PER_MB;

/// Stream index reserved for draws that belong to no particular user.
const GLOBAL_STREAM: u64 = u64::MAX;

/// Train and test sets named by the configuration.
pub fn load_datasets(config: &SimConfig) -> Result<(Dataset, Dataset)> {
    let d = &config.dataset;
    match d.source {
        DatasetSource::Synthetic => {
            let centers = || rng_substream(config.seed, Domain::Dataset, GLOBAL_STREAM, 0);
            let train = gaussian_blobs(
                &d.blobs,
                d.synthetic_train,
                &mut centers(),
                &mut rng_substream(config.seed, Domain::Dataset, 0, 0),
            )?;
            let test = gaussian_blobs(
                &d.blobs,
                d.synthetic_test,
                &mut centers(),
                &mut rng_substream(config.seed, Domain::Dataset, 1, 0),
            )?;
            Ok((train, test))
        }
        DatasetSource::Mnist => {
            let path = |p: &Option<std::path::PathBuf>, key: &str| {
                p.clone().ok_or_else(|| Error::Config(vec![format!("dataset=mnist requires {key}")]))
            };
            let mut train = ingest_mnist(
                &path(&d.mnist_train_images, "mnist_train_images")?,
                &path(&d.mnist_train_labels, "mnist_train_labels")?,
            )?;
            let mut test = ingest_mnist(
                &path(&d.mnist_test_images, "mnist_test_images")?,
                &path(&d.mnist_test_labels, "mnist_test_labels")?,
            )?;
            if let Some(n) = d.mnist_train_limit {
                train = train.subset(&(0..n.min(train.len())).collect::<Vec<_>>());
            }
            if let Some(n) = d.mnist_test_limit {
                test = test.subset(&(0..n.min(test.len())).collect::<Vec<_>>());
            }
            Ok((train, test))
        }
    }
}

/// Everything one selected user needs for its round.
#[derive(Debug, Clone)]
pub struct LaneInput<'a> {
    pub user_id: usize,
    pub round: usize,
    pub mode: Mode,
    pub global: &'a ModelParams,
    pub partition: &'a Dataset,
    /// Position after each local epoch, one entry per epoch.
    pub trajectory: &'a [Position],
    pub k_db: f64,
    /// First epoch at which the link is down, if the user is interrupted.
    pub interrupt_epoch: Option<usize>,
    pub baseline_rate_bps: f64,
    pub sizes: PayloadSizes,
}

#[derive(Debug, Clone)]
pub struct LaneOutcome {
    pub user_id: usize,
    /// Parameters after all local epochs (prefix and suffix joined for SL).
    pub trained: ModelParams,
    pub inbox: ServerInbox,
    pub stale: StaleQueue,
    /// Bits that reached the server during this round.
    pub delivered_bits: u64,
    pub intermediates_sent: usize,
    pub cancelled: usize,
    pub final_outcome: FinalOutcome,
}

/// Local training of one user with opportunistic uploads and the final
/// upload, against a private inbox that the caller merges afterwards.
pub fn run_lane(config: &SimConfig, input: &LaneInput<'_>) -> Result<LaneOutcome> {
    let e = config.hyper.local_epochs;
    if input.trajectory.len() != e {
        return Err(Error::ShapeMismatch { expected: e, actual: input.trajectory.len() });
    }
    let model_bits = input.sizes.model_bits(input.mode);
    let mut budget = compute_budget(config.effective_b(), e, model_bits, input.baseline_rate_bps)?;
    let mut inbox = ServerInbox::new(input.round);
    let mut stale = StaleQueue::default();
    let mut shuffle = rng_substream(config.seed, Domain::Shuffle, input.user_id as u64, input.round as u64);
    let bs = config.geometry.bs_position();
    let n = config.bandwidth_share();

    let mut delivered_bits = 0u64;
    let mut intermediates_sent = 0;
    let mut cancelled = 0;

    let mut whole = input.global.clone();
    let mut halves = match input.mode {
        Mode::Sl => Some(input.global.split_at(config.model.cut_layer)?),
        Mode::Fl => None,
    };
    for t in 1..=e {
        match halves.as_mut() {
            None => whole = local_train_epoch(&whole, input.partition, &config.hyper, &mut shuffle)?,
            Some((prefix, suffix)) => {
                let (p, s) = local_train_epoch_split(prefix, suffix, input.partition, &config.hyper, &mut shuffle)?;
                *prefix = p;
                *suffix = s;
            }
        }
        // the final slot is covered by the upload that follows the loop
        if t == e || !budget.scheduled_epochs.contains(&t) {
            continue;
        }
        let link_down = input.interrupt_epoch.is_some_and(|at| t >= at);
        let rate = if link_down {
            0.0
        } else {
            link_sample(input.trajectory[t - 1], bs, input.k_db, n, &config.channel)?.rate_bps
        };
        let current = match &halves {
            None => whole.clone(),
            Some((p, s)) => ModelParams::join(p, s)?,
        };
        match try_opportunistic_transmit(&mut budget, &current, rate, &mut inbox, input.user_id, t, input.round)? {
            TransmitOutcome::Sent { .. } => {
                intermediates_sent += 1;
                delivered_bits += model_bits;
            }
            TransmitOutcome::Cancelled { .. } => cancelled += 1,
        }
    }

    let trained = match &halves {
        None => whole,
        Some((p, s)) => ModelParams::join(p, s)?,
    };
    let final_bits = input.sizes.final_upload_bits(input.mode);
    let outcome = final_upload(
        input.user_id,
        &trained,
        e,
        final_bits,
        &mut inbox,
        &mut stale,
        input.interrupt_epoch.is_some(),
        config.scheme,
    );
    if outcome == FinalOutcome::Delivered {
        delivered_bits += final_bits;
    }
    Ok(LaneOutcome {
        user_id: input.user_id,
        trained,
        inbox,
        stale,
        delivered_bits,
        intermediates_sent,
        cancelled,
        final_outcome: outcome,
    })
}

fn payload_sizes(config: &SimConfig, shape: &ShapeSpec, partition_size: usize) -> PayloadSizes {
    let bytes = config.bytes_per_param;
    let cut = config.model.cut_layer;
    let bits = |params: usize| (params * 8 * bytes) as u64;
    let user_params: usize = shape.layers()[..cut].iter().map(|l| l.param_count()).sum();
    let mut act = activation_bits(partition_size, shape.cut_width(cut), bytes);
    if config.activations_per_epoch {
        act *= config.hyper.local_epochs as u64;
    }
    PayloadSizes {
        full_model_bits: bits(shape.param_count()),
        user_model_bits: bits(user_params),
        activation_bits: act,
    }
}

/// Simulation state between rounds.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    shape: ShapeSpec,
    global: ModelParams,
    fleet: Vec<UavState>,
    partitions: Vec<Dataset>,
    test: Dataset,
    stale: StaleQueue,
    completed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    pub metrics: Vec<RoundMetrics>,
    pub final_model: ModelParams,
}

impl Simulation {
    /// Validates the configuration, then partitions `train` across the
    /// fleet and initializes the model and UAVs.
    pub fn new(config: SimConfig, train: &Dataset, test: Dataset) -> Result<Self> {
        config.validate()?;
        if train.dim != test.dim || train.num_classes != test.num_classes {
            return Err(Error::invalid("train and test sets disagree on dimension or classes"));
        }
        if train.num_classes != config.hyper.num_classes {
            return Err(Error::invalid(format!(
                "dataset has {} classes, configuration expects {}",
                train.num_classes, config.hyper.num_classes
            )));
        }
        let seed = config.seed;
        let shape = ShapeSpec::mlp(train.dim, &config.model.hidden, config.hyper.num_classes)?;
        shape.check_cut(config.model.cut_layer)?;
        let global = init_model(&shape, &mut rng_substream(seed, Domain::Init, GLOBAL_STREAM, 0));
        let partitions = partition(
            train,
            config.num_uavs,
            &config.partition,
            &mut rng_substream(seed, Domain::Partition, GLOBAL_STREAM, 0),
        )?;
        let fleet = init_fleet(
            &config.fleet_spec(),
            &config.geometry,
            &mut rng_substream(seed, Domain::Mobility, GLOBAL_STREAM, 0),
        );
        Ok(Self { config, shape, global, fleet, partitions, test, stale: StaleQueue::default(), completed: 0 })
    }

    /// Loads the configured datasets and builds the simulation.
    pub fn from_config(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let (train, test) = load_datasets(&config)?;
        Self::new(config, &train, test)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn global(&self) -> &ModelParams {
        &self.global
    }

    pub fn fleet(&self) -> &[UavState] {
        &self.fleet
    }

    pub fn partitions(&self) -> &[Dataset] {
        &self.partitions
    }

    pub fn rounds_completed(&self) -> usize {
        self.completed
    }

    /// Payloads for `user` this round.
    pub fn payload_sizes(&self, user: usize) -> PayloadSizes {
        payload_sizes(&self.config, &self.shape, self.partitions[self.fleet[user].partition_id].len())
    }

    /// Advances one communication round.
    pub fn run_round(&mut self) -> Result<RoundMetrics> {
        let cfg = &self.config;
        let round = self.completed + 1;
        let seed = cfg.seed;
        let e = cfg.hyper.local_epochs;
        let bs = cfg.geometry.bs_position();
        let n = cfg.bandwidth_share();
        let b = cfg.effective_b();

        // link state, interruption and flight path of every UAV
        let mut trajectories = Vec::with_capacity(self.fleet.len());
        let mut candidates = Vec::with_capacity(self.fleet.len());
        let mut baseline = Vec::with_capacity(self.fleet.len());
        for uav in &mut self.fleet {
            let id = uav.id as u64;
            let r = round as u64;
            uav.k_db = resample_k(
                &mut rng_substream(seed, Domain::Channel, id, r),
                cfg.mobility.k_min_db,
                cfg.mobility.k_max_db,
            );
            let mut irng = rng_substream(seed, Domain::Interruption, id, r);
            uav.interrupted = sample_interruption(&mut irng, cfg.mobility.interruption_prob);
            uav.interrupt_epoch = uav.interrupted.then(|| sample_interruption_epoch(&mut irng, e));

            let link = link_sample(uav.position, bs, uav.k_db, n, &cfg.channel)?;
            let rates = LinkRates { uplink_bps: link.rate_bps, downlink_bps: cfg.channel.downlink_rate_bps(n, link.gain) };
            baseline.push(link.rate_bps);

            let mode = if uav.sl_required { Mode::Sl } else { Mode::Fl };
            let part_len = self.partitions[uav.partition_id].len();
            let latency_s = if part_len == 0 {
                f64::INFINITY
            } else {
                let work = RoundWorkload {
                    local_epochs: e,
                    partition_size: part_len,
                    sl_user_compute_fraction: cfg.sl_user_compute_fraction,
                };
                let sizes = payload_sizes(cfg, &self.shape, part_len);
                one_round_latency(uav, mode, &work, b, &sizes, &rates).total_s
            };
            candidates.push(Candidate { id: uav.id, latency_s, sl_required: uav.sl_required });

            let mut mrng = rng_substream(seed, Domain::Mobility, id, r);
            let mut path = Vec::with_capacity(e);
            let mut state = uav.clone();
            for _ in 0..e {
                state = step_position(&state, &cfg.geometry, cfg.mobility.epoch_duration_s, &mut mrng);
                path.push(state.position);
            }
            trajectories.push((state.position, state.waypoint, path));
        }

        let selection = select_users(
            &candidates,
            cfg.tau_max_s,
            cfg.select_k,
            &mut rng_substream(seed, Domain::Selection, GLOBAL_STREAM, round as u64),
        );

        let selected: Vec<usize> = selection.selected.iter().copied().collect();
        let inputs: Vec<LaneInput<'_>> = selected
            .iter()
            .map(|&id| {
                let uav = &self.fleet[id];
                LaneInput {
                    user_id: id,
                    round,
                    mode: selection.mode_of(id).unwrap_or(Mode::Fl),
                    global: &self.global,
                    partition: &self.partitions[uav.partition_id],
                    trajectory: &trajectories[id].2,
                    k_db: uav.k_db,
                    interrupt_epoch: uav.interrupt_epoch,
                    baseline_rate_bps: baseline[id],
                    sizes: self.payload_sizes(id),
                }
            })
            .collect();
        let outcomes: Vec<LaneOutcome> =
            inputs.par_iter().map(|input| run_lane(cfg, input)).collect::<Result<Vec<_>>>()?;

        let mut inbox = ServerInbox::new(round);
        let mut queued = StaleQueue::default();
        let mut delivered_bits = 0u64;
        let mut cancelled = 0;
        for out in outcomes {
            delivered_bits += out.delivered_bits;
            cancelled += out.cancelled;
            inbox.merge(out.inbox);
            queued.extend(out.stale);
        }
        let num_interrupted = selected.iter().filter(|&&id| self.fleet[id].interrupted).count();

        for (uav, (pos, waypoint, _)) in self.fleet.iter_mut().zip(&trajectories) {
            uav.position = *pos;
            uav.waypoint = *waypoint;
        }

        let collected = collect_for_aggregation(&mut inbox, &mut self.stale, cfg.scheme, cfg.async_policy.max_delay);
        self.stale.extend(queued);
        delivered_bits += collected.stale.iter().map(|(s, _)| s.bits).sum::<u64>();

        let num_final_received = collected.timely.iter().filter(|t| t.kind == EntryKind::Final).count();
        let num_intermediate_used = collected.timely.iter().filter(|t| t.kind == EntryKind::Intermediate).count();

        if !collected.is_empty() {
            let timely: Vec<&ModelParams> = collected.timely.iter().map(|t| &t.params).collect();
            let size_of = |user: usize| self.partitions[self.fleet[user].partition_id].len() as f64;
            self.global = if cfg.scheme == Scheme::Async {
                let stale: Vec<(&ModelParams, u32)> = collected.stale.iter().map(|(s, d)| (&s.params, *d)).collect();
                let (tb, sb): (Vec<f64>, Vec<f64>) = match cfg.aggregate {
                    AggregateRule::Uniform => (vec![1.0; timely.len()], vec![1.0; stale.len()]),
                    AggregateRule::Weighted => (
                        collected.timely.iter().map(|t| size_of(t.user_id)).collect(),
                        collected.stale.iter().map(|(s, _)| size_of(s.user_id)).collect(),
                    ),
                };
                async_aggregate_weighted(&timely, &tb, &stale, &sb, &cfg.async_policy)?
            } else {
                match cfg.aggregate {
                    AggregateRule::Uniform => fedavg(&timely)?,
                    AggregateRule::Weighted => {
                        let w: Vec<f64> = collected.timely.iter().map(|t| size_of(t.user_id)).collect();
                        fedavg_weighted(&timely, &w)?
                    }
                }
            };
        }

        let (test_loss, test_accuracy) = evaluate(&self.global, &self.test)?;
        self.completed = round;
        Ok(RoundMetrics {
            round_index: round,
            test_loss,
            test_accuracy,
            comm_mb: delivered_bits as f64 / BITS_PER_MB,
            num_selected: selected.len(),
            num_final_received,
            num_intermediate_used,
            num_interrupted,
            num_cancelled_transmissions: cancelled,
        })
    }

    /// Runs every remaining configured round.
    pub fn run(&mut self) -> Result<Vec<RoundMetrics>> {
        (self.completed..self.config.rounds).map(|_| self.run_round()).collect()
    }

    pub fn into_result(self, metrics: Vec<RoundMetrics>) -> SimulationResult {
        SimulationResult { metrics, final_model: self.global }
    }
}

/// Validates, loads data, and runs all rounds.
pub fn run_simulation(config: &SimConfig) -> Result<SimulationResult> {
    let mut sim = Simulation::from_config(config.clone())?;
    let metrics = sim.run()?;
    Ok(sim.into_result(metrics))
}

/// Same as [`run_simulation`] with caller-supplied datasets.
pub fn run_simulation_with_data(config: &SimConfig, train: &Dataset, test: Dataset) -> Result<SimulationResult> {
    let mut sim = Simulation::new(config.clone(), train, test)?;
    let metrics = sim.run()?;
    Ok(sim.into_result(metrics))
}
