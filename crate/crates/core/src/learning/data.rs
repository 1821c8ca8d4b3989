use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labeled samples stored row-major. A user's local data is a `Dataset` too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub dim: usize,
    pub num_classes: usize,
}

pub type DatasetPartition = Dataset;

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, num_classes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::ShapeMismatch {
                expected: labels.len() * dim,
                actual: features.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::invalid(format!("label {bad} out of range for {num_classes} classes")));
        }
        Ok(Self { features, labels, dim, num_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// New dataset made of the given rows, in order (duplicates allowed).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset { features, labels, dim: self.dim, num_classes: self.num_classes }
    }

    pub fn class_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_classes];
        for &l in &self.labels {
            h[l] += 1;
        }
        h
    }

    pub fn batch(&self) -> Batch<'_> {
        Batch { features: &self.features, labels: &self.labels }
    }
}

/// Borrowed view of contiguous rows.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub features: &'a [f64],
    pub labels: &'a [usize],
}

impl Batch<'_> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub num_classes: usize,
    pub dim: usize,
    /// Standard deviation of the class centres around the origin.
    pub center_spread: f64,
    /// Within-class standard deviation.
    pub noise: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self { num_classes: 10, dim: 20, center_spread: 1.0, noise: 1.0 }
    }
}

/// Gaussian class blobs. Centres come from `center_rng`; samples from
/// `sample_rng`, so train and test sets can share centres but not samples.
/// Features are min-max scaled to `[0, 1]` using fixed bounds
/// `±4·(spread + noise)` and clamped.
pub fn gaussian_blobs<R: Rng + ?Sized>(
    spec: &BlobSpec,
    count: usize,
    center_rng: &mut R,
    sample_rng: &mut R,
) -> Result<Dataset> {
    if spec.num_classes < 2 || spec.dim == 0 {
        return Err(Error::invalid("blobs need at least 2 classes and a positive dimension"));
    }
    let centers: Vec<f64> = (0..spec.num_classes * spec.dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut *center_rng);
            spec.center_spread * z
        })
        .collect();
    let bound = 4.0 * (spec.center_spread + spec.noise);
    let mut features = Vec::with_capacity(count * spec.dim);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        // balanced classes, then shuffled order is left to the partitioner
        let label = i % spec.num_classes;
        let c = &centers[label * spec.dim..(label + 1) * spec.dim];
        for &mu in c {
            let z: f64 = StandardNormal.sample(&mut *sample_rng);
            let v = mu + spec.noise * z;
            features.push(((v + bound) / (2.0 * bound)).clamp(0.0, 1.0));
        }
        labels.push(label);
    }
    Dataset::new(features, labels, spec.dim, spec.num_classes)
}
