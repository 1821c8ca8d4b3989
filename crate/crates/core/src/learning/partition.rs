//! Splitting a dataset across users: iid, label-sorted shards, and
//! Dirichlet class/size imbalance.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionMode {
    Iid,
    NoniidShards,
    Imbalanced,
}

impl std::str::FromStr for PartitionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(Self::Iid),
            "noniid_shards" | "noniid" => Ok(Self::NoniidShards),
            "imbalanced" => Ok(Self::Imbalanced),
            other => Err(Error::invalid(format!("unknown partition mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Iid => "iid",
            Self::NoniidShards => "noniid_shards",
            Self::Imbalanced => "imbalanced",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub mode: PartitionMode,
    pub classes_per_user: usize,
    pub alpha_d: f64,
    pub alpha_imd: f64,
}

impl Default for PartitionSpec {
    fn default() -> Self {
        Self { mode: PartitionMode::NoniidShards, classes_per_user: 2, alpha_d: 0.01, alpha_imd: 2.0 }
    }
}

impl PartitionSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.alpha_d > 0.0) {
            errs.push(format!("alpha_d must be > 0 (got {})", self.alpha_d));
        }
        if !(self.alpha_imd > 0.0) {
            errs.push(format!("alpha_imd must be > 0 (got {})", self.alpha_imd));
        }
        if self.classes_per_user < 1 {
            errs.push("classes_per_user must be >= 1".to_string());
        }
        errs
    }
}

/// Dirichlet draw computed in log space so that tiny concentrations
/// (e.g. 0.01) do not underflow every component to zero.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: f64, k: usize, rng: &mut R) -> Vec<f64> {
    // Gamma(α) = Gamma(α + 1) · U^(1/α)
    let gamma = Gamma::new(alpha + 1.0, 1.0).expect("alpha + 1 > 0");
    let logs: Vec<f64> = (0..k)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u = 1.0 - rng.random::<f64>();
            g.ln() + u.ln() / alpha
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Integer counts summing to `total`, proportional to `weights`
/// (largest-remainder rounding, ties to the lower index).
fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Row indices for each user.
pub fn partition_indices<R: Rng + ?Sized>(
    dataset: &Dataset,
    num_users: usize,
    spec: &PartitionSpec,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if num_users == 0 {
        return Err(Error::invalid("need at least one user"));
    }
    if num_users > dataset.len() {
        return Err(Error::invalid(format!(
            "cannot split {} samples across {num_users} users",
            dataset.len()
        )));
    }
    match spec.mode {
        PartitionMode::Iid => Ok(iid(dataset.len(), num_users, rng)),
        PartitionMode::NoniidShards => shards(dataset, num_users, spec.classes_per_user, rng),
        PartitionMode::Imbalanced => Ok(imbalanced(dataset, num_users, spec, rng)),
    }
}

pub fn partition<R: Rng + ?Sized>(
    dataset: &Dataset,
    num_users: usize,
    spec: &PartitionSpec,
    rng: &mut R,
) -> Result<Vec<Dataset>> {
    let idx = partition_indices(dataset, num_users, spec, rng)?;
    Ok(idx.iter().map(|rows| dataset.subset(rows)).collect())
}

fn iid<R: Rng + ?Sized>(n: usize, users: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let base = n / users;
    let extra = n % users;
    let mut out = Vec::with_capacity(users);
    let mut start = 0;
    for u in 0..users {
        let len = base + usize::from(u < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

fn class_pools<R: Rng + ?Sized>(dataset: &Dataset, rng: &mut R) -> Vec<Vec<usize>> {
    let mut pools = vec![Vec::new(); dataset.num_classes];
    for (i, &l) in dataset.labels.iter().enumerate() {
        pools[l].push(i);
    }
    for p in &mut pools {
        p.shuffle(rng);
    }
    pools
}

/// Every shard holds a single class, so a user dealt `classes_per_user`
/// shards sees at most that many labels.
fn shards<R: Rng + ?Sized>(
    dataset: &Dataset,
    users: usize,
    per_user: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let pools = class_pools(dataset, rng);
    let present: Vec<usize> = (0..pools.len()).filter(|&c| !pools[c].is_empty()).collect();
    let total_shards = users * per_user;
    if total_shards < present.len() {
        return Err(Error::invalid(format!(
            "{total_shards} shards cannot cover {} classes",
            present.len()
        )));
    }
    // one shard per class, the rest proportional to class size
    let mut per_class = vec![0usize; pools.len()];
    for &c in &present {
        per_class[c] = 1;
    }
    let spare = total_shards - present.len();
    let weights: Vec<f64> = present.iter().map(|&c| pools[c].len() as f64).collect();
    for (j, extra) in apportion(&weights, spare).into_iter().enumerate() {
        let c = present[j];
        per_class[c] = (per_class[c] + extra).min(pools[c].len());
    }
    // classes capped by their size hand leftover shards to the largest classes
    let mut missing = total_shards - per_class.iter().sum::<usize>();
    while missing > 0 {
        let c = (0..pools.len())
            .filter(|&c| per_class[c] < pools[c].len())
            .max_by_key(|&c| (pools[c].len() - per_class[c], std::cmp::Reverse(c)))
            .ok_or_else(|| Error::invalid("dataset too small for the requested shards"))?;
        per_class[c] += 1;
        missing -= 1;
    }

    let mut all_shards: Vec<Vec<usize>> = Vec::with_capacity(total_shards);
    for (c, pool) in pools.iter().enumerate() {
        let k = per_class[c];
        if k == 0 {
            continue;
        }
        let (base, extra) = (pool.len() / k, pool.len() % k);
        let mut start = 0;
        for s in 0..k {
            let len = base + usize::from(s < extra);
            all_shards.push(pool[start..start + len].to_vec());
            start += len;
        }
    }
    all_shards.shuffle(rng);
    Ok(all_shards
        .chunks(per_user)
        .map(|group| group.concat())
        .collect())
}

fn imbalanced<R: Rng + ?Sized>(
    dataset: &Dataset,
    users: usize,
    spec: &PartitionSpec,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    let n = dataset.len();
    let mut sizes = apportion(&sample_dirichlet(spec.alpha_imd, users, rng), n);
    // every user keeps at least one sample
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let donor = (0..users).max_by_key(|&u| (sizes[u], std::cmp::Reverse(u))).unwrap();
        sizes[donor] -= 1;
        sizes[empty] += 1;
    }

    let pools = class_pools(dataset, rng);
    let present: Vec<usize> = (0..pools.len()).filter(|&c| !pools[c].is_empty()).collect();
    let mut cursor = vec![0usize; pools.len()];
    let mut out = Vec::with_capacity(users);
    for &size in &sizes {
        let mix = sample_dirichlet(spec.alpha_d, present.len(), rng);
        let counts = apportion(&mix, size);
        let mut rows = Vec::with_capacity(size);
        for (j, &count) in counts.iter().enumerate() {
            let c = present[j];
            for _ in 0..count {
                if cursor[c] < pools[c].len() {
                    rows.push(pools[c][cursor[c]]);
                    cursor[c] += 1;
                } else {
                    // class exhausted: resample with replacement
                    rows.push(pools[c][rng.random_range(0..pools[c].len())]);
                }
            }
        }
        out.push(rows);
    }
    out
}
