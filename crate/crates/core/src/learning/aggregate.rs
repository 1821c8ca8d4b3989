//! Server-side aggregation rules.
//!
//! Reductions run in a fixed order so repeated runs are bit-identical.
//! `fedavg` additionally sorts each coordinate before summing, which makes it
//! exactly invariant under permutation of its inputs.

use serde::{Deserialize, Serialize};

use super::model::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsyncPolicy {
    pub alpha: f64,
    pub exponent_a: f64,
    pub max_delay: u32,
}

impl Default for AsyncPolicy {
    fn default() -> Self {
        Self { alpha: 0.4, exponent_a: 0.5, max_delay: 1 }
    }
}

impl AsyncPolicy {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            errs.push(format!("async_alpha must be in (0, 1] (got {})", self.alpha));
        }
        if !(self.exponent_a >= 0.0) {
            errs.push(format!("async_a must be >= 0 (got {})", self.exponent_a));
        }
        if self.max_delay < 1 {
            errs.push("max_delay must be >= 1".to_string());
        }
        errs
    }
}

fn check_shapes(updates: &[&ModelParams]) -> Result<()> {
    let first = updates.first().ok_or(Error::Empty("no model updates to aggregate"))?;
    for u in &updates[1..] {
        if u.shape != first.shape {
            return Err(Error::ShapeMismatch { expected: first.len(), actual: u.len() });
        }
    }
    Ok(())
}

/// Coordinate-wise arithmetic mean.
///
/// Each coordinate is summed as `min + Σ(v − min)/n` over the sorted
/// values, so identical inputs come back unchanged and the result does not
/// depend on input order.
pub fn fedavg(updates: &[&ModelParams]) -> Result<ModelParams> {
    check_shapes(updates)?;
    let n = updates.len() as f64;
    let mut column = Vec::with_capacity(updates.len());
    let values = (0..updates[0].len())
        .map(|j| {
            column.clear();
            column.extend(updates.iter().map(|u| u.values[j]));
            column.sort_by(f64::total_cmp);
            let base = column[0];
            let spread: f64 = column.iter().map(|v| v - base).sum();
            base + spread / n
        })
        .collect();
    Ok(ModelParams { values, shape: updates[0].shape.clone() })
}

/// `Σ wᵢ·ωᵢ / Σ wᵢ`, anchored on the first heaviest model so a one-hot
/// weight vector returns that model exactly.
pub fn fedavg_weighted(updates: &[&ModelParams], weights: &[f64]) -> Result<ModelParams> {
    check_shapes(updates)?;
    if weights.len() != updates.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} updates",
            weights.len(),
            updates.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::invalid("aggregation weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("aggregation weights sum to zero"));
    }
    let anchor = (0..weights.len())
        .fold(0, |best, i| if weights[i] > weights[best] { i } else { best });
    let base = &updates[anchor].values;
    let values = (0..base.len())
        .map(|j| {
            let b = base[j];
            let acc: f64 = updates
                .iter()
                .zip(weights)
                .map(|(u, w)| w * (u.values[j] - b))
                .sum();
            b + acc / total
        })
        .collect();
    Ok(ModelParams { values, shape: updates[0].shape.clone() })
}

/// Polynomial staleness weight `α·(delay + 1)^(−a)`.
pub fn staleness_weight(delay: u32, policy: &AsyncPolicy) -> f64 {
    policy.alpha * (f64::from(delay) + 1.0).powf(-policy.exponent_a)
}

/// Weighted mean of on-time updates (weight 1) and delayed ones
/// (weight `staleness_weight(delay)`). Entries older than `max_delay`
/// are rejected.
pub fn async_aggregate(
    timely: &[&ModelParams],
    stale: &[(&ModelParams, u32)],
    policy: &AsyncPolicy,
) -> Result<ModelParams> {
    let timely_weights = vec![1.0; timely.len()];
    async_aggregate_weighted(timely, &timely_weights, stale, &[], policy)
}

/// Like [`async_aggregate`] with per-entry base weights (e.g. dataset sizes)
/// multiplied into the staleness weights. An empty `stale_base` means 1.
pub fn async_aggregate_weighted(
    timely: &[&ModelParams],
    timely_base: &[f64],
    stale: &[(&ModelParams, u32)],
    stale_base: &[f64],
    policy: &AsyncPolicy,
) -> Result<ModelParams> {
    if timely.is_empty() && stale.is_empty() {
        return Err(Error::Empty("no model updates to aggregate"));
    }
    if let Some((_, d)) = stale.iter().find(|(_, d)| *d > policy.max_delay) {
        return Err(Error::invalid(format!(
            "update delayed {d} rounds exceeds max_delay {}",
            policy.max_delay
        )));
    }
    let mut models: Vec<&ModelParams> = timely.to_vec();
    let mut weights: Vec<f64> = timely_base.to_vec();
    for (i, (m, d)) in stale.iter().enumerate() {
        models.push(m);
        let base = stale_base.get(i).copied().unwrap_or(1.0);
        weights.push(base * staleness_weight(*d, policy));
    }
    fedavg_weighted(&models, &weights)
}
