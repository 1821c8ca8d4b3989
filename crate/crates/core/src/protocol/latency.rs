//! Payload sizes and one-round latency accounting under the relaxed
//! uplink budget.

use serde::{Deserialize, Serialize};

use crate::learning::ModelParams;
use crate::mobility::UavState;

/// How a selected user trains this round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Federated: the whole model trains on the UAV.
    Fl,
    /// Split: the UAV trains the prefix, the BS the suffix.
    Sl,
}

pub fn model_size_bits(model: &ModelParams, bytes_per_param: usize) -> u64 {
    (model.len() * 8 * bytes_per_param) as u64
}

/// Bits for one epoch's cut-layer activations.
pub fn activation_bits(partition_size: usize, cut_width: usize, bytes_per_value: usize) -> u64 {
    (partition_size * cut_width * 8 * bytes_per_value) as u64
}

/// Uplink time with `b` model transmissions. Activations are sent once.
/// A non-positive rate yields `f64::INFINITY`.
pub fn uplink_latency(mode: Mode, b: usize, model_bits: u64, activation_bits: u64, rate_bps: f64) -> f64 {
    if !(rate_bps > 0.0) {
        return f64::INFINITY;
    }
    let bits = match mode {
        Mode::Fl => b as f64 * model_bits as f64,
        Mode::Sl => b as f64 * model_bits as f64 + activation_bits as f64,
    };
    bits / rate_bps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyProfile {
    pub train_time_s: f64,
    pub downlink_s: f64,
    pub uplink_s: f64,
    pub total_s: f64,
}

/// Per-user payloads for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadSizes {
    /// Whole model, `m_g`.
    pub full_model_bits: u64,
    /// UE-side prefix, `m_l`.
    pub user_model_bits: u64,
    /// Cut-layer activations for the round, `m_a`.
    pub activation_bits: u64,
}

impl PayloadSizes {
    /// Model bits one transmission carries in `mode`.
    pub fn model_bits(&self, mode: Mode) -> u64 {
        match mode {
            Mode::Fl => self.full_model_bits,
            Mode::Sl => self.user_model_bits,
        }
    }

    /// Bits of the end-of-round upload in `mode`.
    pub fn final_upload_bits(&self, mode: Mode) -> u64 {
        match mode {
            Mode::Fl => self.full_model_bits,
            Mode::Sl => self.user_model_bits + self.activation_bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRates {
    /// Uplink rate measured at round start, `r⁰`.
    pub uplink_bps: f64,
    pub downlink_bps: f64,
}

/// Inputs that do not change with the user's mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundWorkload {
    pub local_epochs: usize,
    pub partition_size: usize,
    /// Share of the per-sample compute left on the UAV under split learning.
    pub sl_user_compute_fraction: f64,
}

/// `τ^tr + τ^ul` for FL, plus `τ^dl` for SL.
///
/// The SL downlink carries the UE-side model and the cut-layer gradients,
/// the latter the same size as the activations.
pub fn one_round_latency(
    uav: &UavState,
    mode: Mode,
    work: &RoundWorkload,
    b: usize,
    sizes: &PayloadSizes,
    rates: &LinkRates,
) -> LatencyProfile {
    let per_epoch = work.partition_size as f64 * uav.compute_s_per_sample;
    let fraction = match mode {
        Mode::Fl => 1.0,
        Mode::Sl => work.sl_user_compute_fraction,
    };
    let train_time_s = work.local_epochs as f64 * per_epoch * fraction;
    let uplink_s = uplink_latency(mode, b, sizes.model_bits(mode), sizes.activation_bits, rates.uplink_bps);
    let downlink_s = match mode {
        Mode::Fl => 0.0,
        Mode::Sl => {
            let bits = (sizes.user_model_bits + sizes.activation_bits) as f64;
            if rates.downlink_bps > 0.0 {
                bits / rates.downlink_bps
            } else {
                f64::INFINITY
            }
        }
    };
    LatencyProfile { train_time_s, downlink_s, uplink_s, total_s: train_time_s + uplink_s + downlink_s }
}
