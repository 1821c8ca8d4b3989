//! Full description of one simulation run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelEnvironment;
use crate::error::{Error, Result};
use crate::learning::{AsyncPolicy, BlobSpec, PartitionMode, PartitionSpec, TrainingHyper};
use crate::mobility::{CellGeometry, FleetSpec};
use crate::protocol::Scheme;

/// How the server combines the updates it received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggregateRule {
    /// Plain mean over received models.
    Uniform,
    /// Mean weighted by each user's local dataset size.
    Weighted,
}

/// Share of the uplink band each selected UAV gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BandwidthSplit {
    /// `1 / select_k` of the band.
    Equal,
    /// The whole band.
    Dedicated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetSource {
    Synthetic,
    Mnist,
}

macro_rules! str_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl std::str::FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Self::$variant),)+
                    other => Err(Error::invalid(format!(
                        concat!("unknown ", stringify!($ty), " `{}` (expected one of: ", $($name, " "),+, ")"),
                        other
                    ))),
                }
            }
        }
        impl std::fmt::Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(match self { $(Self::$variant => $name,)+ })
            }
        }
    };
}

str_enum!(AggregateRule { Uniform => "uniform", Weighted => "weighted" });
str_enum!(BandwidthSplit { Equal => "equal", Dedicated => "dedicated" });
str_enum!(DatasetSource { Synthetic => "synthetic", Mnist => "mnist" });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    pub synthetic_train: usize,
    pub synthetic_test: usize,
    pub blobs: BlobSpec,
    pub mnist_train_images: Option<PathBuf>,
    pub mnist_train_labels: Option<PathBuf>,
    pub mnist_test_images: Option<PathBuf>,
    pub mnist_test_labels: Option<PathBuf>,
    /// Keep only the first N training samples.
    pub mnist_train_limit: Option<usize>,
    pub mnist_test_limit: Option<usize>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            source: DatasetSource::Synthetic,
            synthetic_train: 5000,
            synthetic_test: 1000,
            blobs: BlobSpec::default(),
            mnist_train_images: None,
            mnist_train_labels: None,
            mnist_test_images: None,
            mnist_test_labels: None,
            mnist_train_limit: None,
            mnist_test_limit: None,
        }
    }
}

/// Per-round motion and link dynamics, plus how the fleet is initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub speed_mps: f64,
    /// Simulated flight time per local epoch.
    pub epoch_duration_s: f64,
    pub interruption_prob: f64,
    pub k_min_db: f64,
    pub k_max_db: f64,
    /// Fraction of UAVs that are compute-limited and must use split learning.
    pub sl_fraction: f64,
    pub compute_s_per_sample: f64,
    pub limited_compute_s_per_sample: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self {
            speed_mps: 10.0,
            epoch_duration_s: 1.5,
            interruption_prob: 0.3,
            k_min_db: 1.8,
            k_max_db: 5.0,
            sl_fraction: 0.5,
            compute_s_per_sample: 1e-4,
            limited_compute_s_per_sample: 4e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Hidden layer widths of the MLP.
    pub hidden: Vec<usize>,
    /// Number of layers run on the UAV under split learning.
    pub cut_layer: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: vec![32], cut_layer: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rounds: usize,
    pub num_uavs: usize,
    pub select_k: usize,
    pub scheme: Scheme,
    /// Uplink transmissions per user per round.
    pub b: usize,
    pub tau_max_s: f64,
    pub hyper: TrainingHyper,
    pub partition: PartitionSpec,
    pub channel: ChannelEnvironment,
    pub bandwidth_split: BandwidthSplit,
    pub geometry: CellGeometry,
    pub mobility: MobilityConfig,
    /// Share of per-sample compute left on the UAV under split learning.
    pub sl_user_compute_fraction: f64,
    pub async_policy: AsyncPolicy,
    pub aggregate: AggregateRule,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    /// Count cut-layer activations once per epoch instead of once per round.
    pub activations_per_epoch: bool,
    pub bytes_per_param: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            num_uavs: 30,
            select_k: 10,
            scheme: Scheme::Opt,
            b: 2,
            tau_max_s: 9.0,
            hyper: TrainingHyper::default(),
            partition: PartitionSpec::default(),
            channel: ChannelEnvironment::default(),
            bandwidth_split: BandwidthSplit::Equal,
            geometry: CellGeometry::default(),
            mobility: MobilityConfig::default(),
            sl_user_compute_fraction: 0.5,
            async_policy: AsyncPolicy::default(),
            aggregate: AggregateRule::Uniform,
            dataset: DatasetConfig::default(),
            model: ModelConfig::default(),
            activations_per_epoch: false,
            bytes_per_param: 4,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// Every violated constraint, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.num_uavs < 1 {
            errs.push("num_uavs must be >= 1".to_string());
        }
        if self.select_k < 1 {
            errs.push("select_k must be >= 1".to_string());
        }
        if self.select_k > self.num_uavs {
            errs.push(format!("select_k ({}) must not exceed num_uavs ({})", self.select_k, self.num_uavs));
        }
        if self.b < 1 {
            errs.push(format!("b must be >= 1 (got {})", self.b));
        }
        if self.b > self.hyper.local_epochs {
            errs.push(format!(
                "b ({}) must not exceed local_epochs ({})",
                self.b, self.hyper.local_epochs
            ));
        }
        if self.scheme != Scheme::Opt && self.b != 1 {
            errs.push(format!("scheme {} requires b = 1 (got {})", self.scheme, self.b));
        }
        if !(self.tau_max_s >= 0.0) {
            errs.push(format!("tau_max_s must be >= 0 (got {})", self.tau_max_s));
        }
        errs.extend(self.hyper.validate());
        errs.extend(self.partition.validate());
        errs.extend(self.channel.validate());
        errs.extend(self.geometry.validate());
        errs.extend(self.async_policy.validate());

        let m = &self.mobility;
        if !(m.speed_mps >= 0.0 && m.speed_mps.is_finite()) {
            errs.push(format!("speed_mps must be >= 0 (got {})", m.speed_mps));
        }
        if !(m.epoch_duration_s > 0.0) {
            errs.push(format!("epoch_duration_s must be > 0 (got {})", m.epoch_duration_s));
        }
        if !(0.0..=1.0).contains(&m.interruption_prob) {
            errs.push(format!("interruption_prob must be in [0, 1] (got {})", m.interruption_prob));
        }
        if !(m.k_min_db <= m.k_max_db) {
            errs.push(format!("k_min_db ({}) must not exceed k_max_db ({})", m.k_min_db, m.k_max_db));
        }
        if !(0.0..=1.0).contains(&m.sl_fraction) {
            errs.push(format!("sl_fraction must be in [0, 1] (got {})", m.sl_fraction));
        }
        if !(m.compute_s_per_sample >= 0.0) || !(m.limited_compute_s_per_sample >= 0.0) {
            errs.push("compute times per sample must be >= 0".to_string());
        }
        if !(self.sl_user_compute_fraction >= 0.0 && self.sl_user_compute_fraction <= 1.0) {
            errs.push(format!(
                "sl_user_compute_fraction must be in [0, 1] (got {})",
                self.sl_user_compute_fraction
            ));
        }
        if self.bytes_per_param < 1 {
            errs.push("bytes_per_param must be >= 1".to_string());
        }

        if self.model.hidden.iter().any(|&w| w == 0) {
            errs.push("hidden layer widths must be >= 1".to_string());
        }
        let layers = self.model.hidden.len() + 1;
        if self.model.cut_layer < 1 || self.model.cut_layer >= layers {
            errs.push(format!(
                "cut_layer must be in 1..{} for {} hidden layer(s) (got {})",
                layers,
                self.model.hidden.len(),
                self.model.cut_layer
            ));
        }

        let d = &self.dataset;
        if d.blobs.num_classes != self.hyper.num_classes {
            errs.push(format!(
                "num_classes mismatch: dataset has {}, training expects {}",
                d.blobs.num_classes, self.hyper.num_classes
            ));
        }
        match d.source {
            DatasetSource::Synthetic => {
                if d.synthetic_train < self.num_uavs {
                    errs.push(format!(
                        "synthetic_train ({}) must be >= num_uavs ({})",
                        d.synthetic_train, self.num_uavs
                    ));
                }
                if d.synthetic_test < 1 {
                    errs.push("synthetic_test must be >= 1".to_string());
                }
                if d.blobs.dim < 1 {
                    errs.push("synthetic_dim must be >= 1".to_string());
                }
                if !(d.blobs.center_spread >= 0.0) || !(d.blobs.noise >= 0.0) {
                    errs.push("synthetic_spread and synthetic_noise must be >= 0".to_string());
                }
            }
            DatasetSource::Mnist => {
                for (key, v) in [
                    ("mnist_train_images", &d.mnist_train_images),
                    ("mnist_train_labels", &d.mnist_train_labels),
                    ("mnist_test_images", &d.mnist_test_images),
                    ("mnist_test_labels", &d.mnist_test_labels),
                ] {
                    if v.is_none() {
                        errs.push(format!("dataset=mnist requires {key}"));
                    }
                }
                if self.hyper.num_classes != 10 {
                    errs.push("dataset=mnist requires num_classes = 10".to_string());
                }
            }
        }
        if self.partition.mode == PartitionMode::NoniidShards
            && self.num_uavs * self.partition.classes_per_user < self.hyper.num_classes
            && d.source == DatasetSource::Synthetic
        {
            errs.push(format!(
                "{} users x {} classes per user cannot cover {} classes",
                self.num_uavs, self.partition.classes_per_user, self.hyper.num_classes
            ));
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Bandwidth share `n` used for every selected UAV.
    pub fn bandwidth_share(&self) -> f64 {
        match self.bandwidth_split {
            BandwidthSplit::Equal => 1.0 / self.select_k as f64,
            BandwidthSplit::Dedicated => 1.0,
        }
    }

    pub fn fleet_spec(&self) -> FleetSpec {
        FleetSpec {
            num_uavs: self.num_uavs,
            speed_mps: self.mobility.speed_mps,
            sl_fraction: self.mobility.sl_fraction,
            compute_s_per_sample: self.mobility.compute_s_per_sample,
            limited_compute_s_per_sample: self.mobility.limited_compute_s_per_sample,
            k_min_db: self.mobility.k_min_db,
            k_max_db: self.mobility.k_max_db,
        }
    }

    /// Transmission budget actually granted under this scheme.
    pub fn effective_b(&self) -> usize {
        match self.scheme {
            Scheme::Opt => self.b,
            Scheme::Discard | Scheme::Async => 1,
        }
    }
}
