//! Flat `key=value` configuration files.
//!
//! One pair per line; `#` starts a comment; blank lines are ignored. Every
//! key is optional and unknown keys are rejected. [`serialize_config`]
//! writes every key in a fixed order, which is the canonical form.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::NoiseModel;
use crate::error::{Error, Result};
use crate::sim::SimConfig;

/// Every recognised key, in canonical order.
pub const CONFIG_KEYS: &[&str] = &[
    "rounds",
    "num_uavs",
    "select_k",
    "scheme",
    "b",
    "tau_max_s",
    "local_epochs",
    "batch_size",
    "lr",
    "num_classes",
    "partition",
    "classes_per_user",
    "alpha_d",
    "alpha_imd",
    "aggregate",
    "hidden",
    "cut_layer",
    "carrier_hz",
    "bw_uav_hz",
    "bw_bs_hz",
    "p_uav_dbm",
    "p_bs_dbm",
    "noise_dbm_per_hz",
    "noise_total_dbm",
    "a0",
    "b0",
    "eta_los_db",
    "eta_nlos_db",
    "fspl_exponent",
    "bandwidth_split",
    "cell_radius",
    "bs_height",
    "alt_min",
    "alt_max",
    "speed_mps",
    "epoch_duration_s",
    "interruption_prob",
    "k_min_db",
    "k_max_db",
    "sl_fraction",
    "compute_s_per_sample",
    "limited_compute_s_per_sample",
    "sl_user_compute_fraction",
    "async_alpha",
    "async_a",
    "max_delay",
    "activations_per_epoch",
    "bytes_per_param",
    "dataset",
    "synthetic_train",
    "synthetic_test",
    "synthetic_dim",
    "synthetic_spread",
    "synthetic_noise",
    "mnist_train_images",
    "mnist_train_labels",
    "mnist_test_images",
    "mnist_test_labels",
    "mnist_train_limit",
    "mnist_test_limit",
    "seed",
];

const NONE: &str = "none";

fn opt_to_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| NONE.to_string(), T::to_string)
}

fn path_to_string(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| NONE.to_string(), |p| p.display().to_string())
}

/// Current value of `key` in canonical text form.
pub fn get_value(cfg: &SimConfig, key: &str) -> Option<String> {
    let c = &cfg.channel;
    let m = &cfg.mobility;
    let d = &cfg.dataset;
    Some(match key {
        "rounds" => cfg.rounds.to_string(),
        "num_uavs" => cfg.num_uavs.to_string(),
        "select_k" => cfg.select_k.to_string(),
        "scheme" => cfg.scheme.to_string(),
        "b" => cfg.b.to_string(),
        "tau_max_s" => cfg.tau_max_s.to_string(),
        "local_epochs" => cfg.hyper.local_epochs.to_string(),
        "batch_size" => cfg.hyper.batch_size.to_string(),
        "lr" => cfg.hyper.learning_rate.to_string(),
        "num_classes" => cfg.hyper.num_classes.to_string(),
        "partition" => cfg.partition.mode.to_string(),
        "classes_per_user" => cfg.partition.classes_per_user.to_string(),
        "alpha_d" => cfg.partition.alpha_d.to_string(),
        "alpha_imd" => cfg.partition.alpha_imd.to_string(),
        "aggregate" => cfg.aggregate.to_string(),
        "hidden" => cfg.model.hidden.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        "cut_layer" => cfg.model.cut_layer.to_string(),
        "carrier_hz" => c.carrier_hz.to_string(),
        "bw_uav_hz" => c.uav_bandwidth_hz.to_string(),
        "bw_bs_hz" => c.bs_bandwidth_hz.to_string(),
        "p_uav_dbm" => c.uav_power_dbm.to_string(),
        "p_bs_dbm" => c.bs_power_dbm.to_string(),
        "noise_dbm_per_hz" => match c.noise {
            NoiseModel::DensityDbmPerHz(v) => v.to_string(),
            NoiseModel::TotalDbm(_) => "-174".to_string(),
        },
        "noise_total_dbm" => match c.noise {
            NoiseModel::DensityDbmPerHz(_) => NONE.to_string(),
            NoiseModel::TotalDbm(v) => v.to_string(),
        },
        "a0" => c.a0.to_string(),
        "b0" => c.b0.to_string(),
        "eta_los_db" => c.eta_los_db.to_string(),
        "eta_nlos_db" => c.eta_nlos_db.to_string(),
        "fspl_exponent" => c.fspl_exponent.to_string(),
        "bandwidth_split" => cfg.bandwidth_split.to_string(),
        "cell_radius" => cfg.geometry.cell_radius_m.to_string(),
        "bs_height" => cfg.geometry.bs_height_m.to_string(),
        "alt_min" => cfg.geometry.alt_min_m.to_string(),
        "alt_max" => cfg.geometry.alt_max_m.to_string(),
        "speed_mps" => m.speed_mps.to_string(),
        "epoch_duration_s" => m.epoch_duration_s.to_string(),
        "interruption_prob" => m.interruption_prob.to_string(),
        "k_min_db" => m.k_min_db.to_string(),
        "k_max_db" => m.k_max_db.to_string(),
        "sl_fraction" => m.sl_fraction.to_string(),
        "compute_s_per_sample" => m.compute_s_per_sample.to_string(),
        "limited_compute_s_per_sample" => m.limited_compute_s_per_sample.to_string(),
        "sl_user_compute_fraction" => cfg.sl_user_compute_fraction.to_string(),
        "async_alpha" => cfg.async_policy.alpha.to_string(),
        "async_a" => cfg.async_policy.exponent_a.to_string(),
        "max_delay" => cfg.async_policy.max_delay.to_string(),
        "activations_per_epoch" => cfg.activations_per_epoch.to_string(),
        "bytes_per_param" => cfg.bytes_per_param.to_string(),
        "dataset" => d.source.to_string(),
        "synthetic_train" => d.synthetic_train.to_string(),
        "synthetic_test" => d.synthetic_test.to_string(),
        "synthetic_dim" => d.blobs.dim.to_string(),
        "synthetic_spread" => d.blobs.center_spread.to_string(),
        "synthetic_noise" => d.blobs.noise.to_string(),
        "mnist_train_images" => path_to_string(&d.mnist_train_images),
        "mnist_train_labels" => path_to_string(&d.mnist_train_labels),
        "mnist_test_images" => path_to_string(&d.mnist_test_images),
        "mnist_test_labels" => path_to_string(&d.mnist_test_labels),
        "mnist_train_limit" => opt_to_string(&d.mnist_train_limit),
        "mnist_test_limit" => opt_to_string(&d.mnist_test_limit),
        "seed" => cfg.seed.to_string(),
        _ => return None,
    })
}

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|_| format!("cannot parse `{v}` as {}", std::any::type_name::<T>()))
}

fn float(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = num(v)?;
    if x.is_nan() {
        return Err("NaN is not allowed".to_string());
    }
    Ok(x)
}

fn named<T: FromStr<Err = Error>>(v: &str) -> std::result::Result<T, String> {
    v.parse::<T>().map_err(|e| match e {
        Error::InvalidArgument(m) => m,
        other => other.to_string(),
    })
}

fn opt_num<T: FromStr>(v: &str) -> std::result::Result<Option<T>, String> {
    if v == NONE { Ok(None) } else { num(v).map(Some) }
}

fn opt_path(v: &str) -> Option<PathBuf> {
    (v != NONE).then(|| PathBuf::from(v))
}

fn boolean(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

/// Sets one key from its text value.
pub fn set_value(cfg: &mut SimConfig, key: &str, v: &str) -> std::result::Result<(), String> {
    let c = &mut cfg.channel;
    let m = &mut cfg.mobility;
    let d = &mut cfg.dataset;
    match key {
        "rounds" => cfg.rounds = num(v)?,
        "num_uavs" => cfg.num_uavs = num(v)?,
        "select_k" => cfg.select_k = num(v)?,
        "scheme" => cfg.scheme = named(v)?,
        "b" => cfg.b = num(v)?,
        "tau_max_s" => cfg.tau_max_s = float(v)?,
        "local_epochs" => cfg.hyper.local_epochs = num(v)?,
        "batch_size" => cfg.hyper.batch_size = num(v)?,
        "lr" => cfg.hyper.learning_rate = float(v)?,
        "num_classes" => {
            let k = num(v)?;
            cfg.hyper.num_classes = k;
            d.blobs.num_classes = k;
        }
        "partition" => cfg.partition.mode = named(v)?,
        "classes_per_user" => cfg.partition.classes_per_user = num(v)?,
        "alpha_d" => cfg.partition.alpha_d = float(v)?,
        "alpha_imd" => cfg.partition.alpha_imd = float(v)?,
        "aggregate" => cfg.aggregate = named(v)?,
        "hidden" => {
            cfg.model.hidden = if v.is_empty() || v == NONE {
                Vec::new()
            } else {
                v.split(',').map(|w| num(w.trim())).collect::<std::result::Result<_, _>>()?
            }
        }
        "cut_layer" => cfg.model.cut_layer = num(v)?,
        "carrier_hz" => c.carrier_hz = float(v)?,
        "bw_uav_hz" => c.uav_bandwidth_hz = float(v)?,
        "bw_bs_hz" => c.bs_bandwidth_hz = float(v)?,
        "p_uav_dbm" => c.uav_power_dbm = float(v)?,
        "p_bs_dbm" => c.bs_power_dbm = float(v)?,
        "noise_dbm_per_hz" => c.noise = NoiseModel::DensityDbmPerHz(float(v)?),
        "noise_total_dbm" => {
            if v != NONE {
                c.noise = NoiseModel::TotalDbm(float(v)?);
            }
        }
        "a0" => c.a0 = float(v)?,
        "b0" => c.b0 = float(v)?,
        "eta_los_db" => c.eta_los_db = float(v)?,
        "eta_nlos_db" => c.eta_nlos_db = float(v)?,
        "fspl_exponent" => c.fspl_exponent = float(v)?,
        "bandwidth_split" => cfg.bandwidth_split = named(v)?,
        "cell_radius" => cfg.geometry.cell_radius_m = float(v)?,
        "bs_height" => cfg.geometry.bs_height_m = float(v)?,
        "alt_min" => cfg.geometry.alt_min_m = float(v)?,
        "alt_max" => cfg.geometry.alt_max_m = float(v)?,
        "speed_mps" => m.speed_mps = float(v)?,
        "epoch_duration_s" => m.epoch_duration_s = float(v)?,
        "interruption_prob" => m.interruption_prob = float(v)?,
        "k_min_db" => m.k_min_db = float(v)?,
        "k_max_db" => m.k_max_db = float(v)?,
        "sl_fraction" => m.sl_fraction = float(v)?,
        "compute_s_per_sample" => m.compute_s_per_sample = float(v)?,
        "limited_compute_s_per_sample" => m.limited_compute_s_per_sample = float(v)?,
        "sl_user_compute_fraction" => cfg.sl_user_compute_fraction = float(v)?,
        "async_alpha" => cfg.async_policy.alpha = float(v)?,
        "async_a" => cfg.async_policy.exponent_a = float(v)?,
        "max_delay" => cfg.async_policy.max_delay = num(v)?,
        "activations_per_epoch" => cfg.activations_per_epoch = boolean(v)?,
        "bytes_per_param" => cfg.bytes_per_param = num(v)?,
        "dataset" => d.source = named(v)?,
        "synthetic_train" => d.synthetic_train = num(v)?,
        "synthetic_test" => d.synthetic_test = num(v)?,
        "synthetic_dim" => d.blobs.dim = num(v)?,
        "synthetic_spread" => d.blobs.center_spread = float(v)?,
        "synthetic_noise" => d.blobs.noise = float(v)?,
        "mnist_train_images" => d.mnist_train_images = opt_path(v),
        "mnist_train_labels" => d.mnist_train_labels = opt_path(v),
        "mnist_test_images" => d.mnist_test_images = opt_path(v),
        "mnist_test_labels" => d.mnist_test_labels = opt_path(v),
        "mnist_train_limit" => d.mnist_train_limit = opt_num(v)?,
        "mnist_test_limit" => d.mnist_test_limit = opt_num(v)?,
        "seed" => cfg.seed = num(v)?,
        other => return Err(format!("unknown key `{other}`")),
    }
    Ok(())
}

/// Parses text without checking cross-field constraints.
///
/// Keys are applied in canonical order, so `noise_total_dbm` overrides
/// `noise_dbm_per_hz` wherever either appears in the file.
pub fn parse_config_text_unchecked(text: &str) -> Result<SimConfig> {
    let mut pairs: BTreeMap<usize, (usize, String)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("expected key=value, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let slot = CONFIG_KEYS.iter().position(|k| *k == key).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("unknown key `{key}`"),
        })?;
        if let Some((first, _)) = pairs.get(&slot) {
            return Err(Error::Parse { line: line_no, message: format!("duplicate key `{key}` (first on line {first})") });
        }
        pairs.insert(slot, (line_no, value.to_string()));
    }
    let mut cfg = SimConfig::default();
    for (slot, (line, value)) in pairs {
        set_value(&mut cfg, CONFIG_KEYS[slot], &value).map_err(|message| Error::Parse {
            line,
            message: format!("{}: {message}", CONFIG_KEYS[slot]),
        })?;
    }
    Ok(cfg)
}

/// Parses and validates configuration text.
pub fn parse_config_text(text: &str) -> Result<SimConfig> {
    let cfg = parse_config_text_unchecked(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    parse_config_text(&std::fs::read_to_string(path)?)
}

/// Canonical text: every key, one per line, in [`CONFIG_KEYS`] order.
pub fn serialize_config(cfg: &SimConfig) -> String {
    CONFIG_KEYS
        .iter()
        .map(|k| format!("{k}={}\n", get_value(cfg, k).unwrap_or_default()))
        .collect()
}
