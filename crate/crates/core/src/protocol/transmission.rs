//! Opportunistic transmission of intermediate models during local
//! training.
//!
//! A user granted `b` transmissions per round gets an extra uplink allowance
//! of `(b − 1)·m / r⁰` seconds. At each scheduled epoch it measures its
//! current rate and, if the real-time delay `m / r` still fits in the
//! allowance, uploads its current parameters and spends that delay.
//! Otherwise the scheduled transmission is cancelled.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::inbox::{EntryKind, InboxEntry, ServerInbox};
use crate::error::{Error, Result};
use crate::learning::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionBudget {
    pub b: usize,
    /// Remaining extra uplink time, seconds.
    pub extra_s: f64,
    pub scheduled_epochs: BTreeSet<usize>,
    pub model_bits: u64,
    pub baseline_rate_bps: f64,
}

/// Epochs (1-based) at which a transmission is scheduled.
///
/// With `b | e` these are the multiples of `e/b`; otherwise the slots are
/// spread as `ceil(k·e/b)` for `k = 1..=b`, which agrees with the multiples
/// whenever `b` divides `e`. The final epoch is always included.
pub fn scheduled_epochs(e: usize, b: usize) -> Result<BTreeSet<usize>> {
    if e == 0 || b == 0 {
        return Err(Error::invalid("epochs and transmissions must both be >= 1"));
    }
    if b > e {
        return Err(Error::invalid(format!("cannot schedule {b} transmissions in {e} epochs")));
    }
    Ok((1..=b).map(|k| (k * e).div_ceil(b)).collect())
}

pub fn compute_budget(
    b: usize,
    e: usize,
    model_bits: u64,
    baseline_rate_bps: f64,
) -> Result<TransmissionBudget> {
    if !(baseline_rate_bps > 0.0) || !baseline_rate_bps.is_finite() {
        return Err(Error::invalid(format!(
            "baseline rate must be positive and finite (got {baseline_rate_bps})"
        )));
    }
    let scheduled = scheduled_epochs(e, b)?;
    let extra_s = (b - 1) as f64 * model_bits as f64 / baseline_rate_bps;
    Ok(TransmissionBudget {
        b,
        extra_s,
        scheduled_epochs: scheduled,
        model_bits,
        baseline_rate_bps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TransmitOutcome {
    /// Uploaded; the delay was deducted from the allowance.
    Sent { delay_s: f64 },
    /// The delay did not fit; nothing changed.
    Cancelled { delay_s: f64 },
}

impl TransmitOutcome {
    pub fn is_sent(&self) -> bool {
        matches!(self, Self::Sent { .. })
    }
}

/// Attempts the scheduled upload at epoch `e_t`. A zero or negative link
/// rate (e.g. an interrupted link) means an infinite delay.
pub fn try_opportunistic_transmit(
    budget: &mut TransmissionBudget,
    params: &ModelParams,
    link_rate_bps: f64,
    inbox: &mut ServerInbox,
    user_id: usize,
    e_t: usize,
    round: usize,
) -> Result<TransmitOutcome> {
    if !budget.scheduled_epochs.contains(&e_t) {
        return Err(Error::invalid(format!("epoch {e_t} is not a scheduled transmission slot")));
    }
    let delay_s = if link_rate_bps > 0.0 {
        budget.model_bits as f64 / link_rate_bps
    } else {
        f64::INFINITY
    };
    if delay_s <= budget.extra_s {
        inbox.deposit(InboxEntry {
            user_id,
            params: params.clone(),
            epoch_tag: e_t,
            round_tag: round,
            kind: EntryKind::Intermediate,
        });
        budget.extra_s -= delay_s;
        Ok(TransmitOutcome::Sent { delay_s })
    } else {
        Ok(TransmitOutcome::Cancelled { delay_s })
    }
}
