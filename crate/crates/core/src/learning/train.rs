//! Cross-entropy loss, exact gradients and mini-batch SGD, in both the
//! whole-model and the split (user prefix + server suffix) forms.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::data::{Batch, Dataset};
use super::model::{backward, forward, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHyper {
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub num_classes: usize,
}

impl Default for TrainingHyper {
    fn default() -> Self {
        Self { local_epochs: 6, batch_size: 10, learning_rate: 0.01, num_classes: 10 }
    }
}

impl TrainingHyper {
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.local_epochs < 1 {
            errs.push("local_epochs must be >= 1".to_string());
        }
        if self.batch_size < 1 {
            errs.push("batch_size must be >= 1".to_string());
        }
        if !(self.learning_rate > 0.0) {
            errs.push(format!("lr must be > 0 (got {})", self.learning_rate));
        }
        if self.num_classes < 2 {
            errs.push("num_classes must be >= 2".to_string());
        }
        errs
    }
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
    max + sum.ln()
}

/// `−log softmax(z)[label]` for one row of logits.
pub fn sample_loss(logits: &[f64], label: usize) -> f64 {
    log_sum_exp(logits) - logits[label]
}

fn check_batch(model: &ModelParams, batch: &Batch<'_>) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let dim = model.shape.input_dim();
    if batch.features.len() != batch.len() * dim {
        return Err(Error::ShapeMismatch { expected: batch.len() * dim, actual: batch.features.len() });
    }
    Ok(())
}

pub fn cross_entropy_loss(model: &ModelParams, batch: Batch<'_>) -> Result<f64> {
    check_batch(model, &batch)?;
    let cache = forward(model, batch.features, batch.len());
    let k = model.shape.output_dim();
    let total: f64 = cache
        .output()
        .chunks_exact(k)
        .zip(batch.labels)
        .map(|(z, &y)| sample_loss(z, y))
        .sum();
    Ok(total / batch.len() as f64)
}

/// Gradient of the mean loss w.r.t. the logits: `(softmax − onehot)/batch`.
fn logit_gradient(logits: &[f64], labels: &[usize], k: usize) -> Vec<f64> {
    let scale = 1.0 / labels.len() as f64;
    let mut out = Vec::with_capacity(logits.len());
    for (z, &y) in logits.chunks_exact(k).zip(labels) {
        let lse = log_sum_exp(z);
        for (c, &zc) in z.iter().enumerate() {
            let p = (zc - lse).exp();
            let t = if c == y { 1.0 } else { 0.0 };
            out.push((p - t) * scale);
        }
    }
    out
}

pub fn gradient(model: &ModelParams, batch: Batch<'_>) -> Result<Vec<f64>> {
    check_batch(model, &batch)?;
    let cache = forward(model, batch.features, batch.len());
    let d_logits = logit_gradient(cache.output(), batch.labels, model.shape.output_dim());
    Ok(backward(model, &cache, &d_logits).0)
}

fn sgd_update(values: &mut [f64], grad: &[f64], lr: f64) {
    for (w, g) in values.iter_mut().zip(grad) {
        *w -= lr * g;
    }
}

/// Visits the seeded shuffle of `partition` in mini-batches.
fn for_each_batch<R: Rng + ?Sized>(
    partition: &Dataset,
    batch_size: usize,
    rng: &mut R,
    mut f: impl FnMut(Batch<'_>),
) {
    let mut order: Vec<usize> = (0..partition.len()).collect();
    order.shuffle(rng);
    let mut features = Vec::with_capacity(batch_size * partition.dim);
    let mut labels = Vec::with_capacity(batch_size);
    for chunk in order.chunks(batch_size) {
        features.clear();
        labels.clear();
        for &i in chunk {
            features.extend_from_slice(partition.row(i));
            labels.push(partition.labels[i]);
        }
        f(Batch { features: &features, labels: &labels });
    }
}

/// One pass of mini-batch SGD over the partition.
pub fn local_train_epoch<R: Rng + ?Sized>(
    model: &ModelParams,
    partition: &Dataset,
    hyper: &TrainingHyper,
    rng: &mut R,
) -> Result<ModelParams> {
    if partition.is_empty() {
        return Err(Error::Empty("training partition"));
    }
    let mut out = model.clone();
    for_each_batch(partition, hyper.batch_size, rng, |batch| {
        let cache = forward(&out, batch.features, batch.len());
        let d_logits = logit_gradient(cache.output(), batch.labels, out.shape.output_dim());
        let (grad, _) = backward(&out, &cache, &d_logits);
        sgd_update(&mut out.values, &grad, hyper.learning_rate);
    });
    Ok(out)
}

/// Split-learning epoch: the user runs `prefix` up to the cut layer, the
/// server runs `suffix`, returns the cut-layer gradient, and each side
/// updates its own half.
pub fn local_train_epoch_split<R: Rng + ?Sized>(
    prefix: &ModelParams,
    suffix: &ModelParams,
    partition: &Dataset,
    hyper: &TrainingHyper,
    rng: &mut R,
) -> Result<(ModelParams, ModelParams)> {
    if partition.is_empty() {
        return Err(Error::Empty("training partition"));
    }
    if prefix.shape.layers().last().map(|l| l.fan_out) != Some(suffix.shape.input_dim()) {
        return Err(Error::invalid("prefix output width does not match suffix input"));
    }
    let mut user = prefix.clone();
    let mut server = suffix.clone();
    for_each_batch(partition, hyper.batch_size, rng, |batch| {
        let n = batch.len();
        let user_cache = forward(&user, batch.features, n);
        // cut-layer activations travel to the server
        let server_cache = forward(&server, user_cache.output(), n);
        let d_logits = logit_gradient(server_cache.output(), batch.labels, server.shape.output_dim());
        let (server_grad, d_cut) = backward(&server, &server_cache, &d_logits);
        // cut-layer gradient travels back to the user
        let (user_grad, _) = backward(&user, &user_cache, &d_cut);
        sgd_update(&mut server.values, &server_grad, hyper.learning_rate);
        sgd_update(&mut user.values, &user_grad, hyper.learning_rate);
    });
    Ok((user, server))
}

/// Predicted class for one row; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean cross-entropy and accuracy on a held-out set.
pub fn evaluate(model: &ModelParams, test: &Dataset) -> Result<(f64, f64)> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let k = model.shape.output_dim();
    let mut loss = 0.0;
    let mut correct = 0usize;
    // bounded chunks keep the activation buffers small on large test sets
    const CHUNK: usize = 512;
    for start in (0..test.len()).step_by(CHUNK) {
        let end = (start + CHUNK).min(test.len());
        let feats = &test.features[start * test.dim..end * test.dim];
        let labels = &test.labels[start..end];
        let cache = forward(model, feats, end - start);
        for (z, &y) in cache.output().chunks_exact(k).zip(labels) {
            loss += sample_loss(z, y);
            if argmax(z) == y {
                correct += 1;
            }
        }
    }
    Ok((loss / test.len() as f64, correct as f64 / test.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::data::{gaussian_blobs, BlobSpec};
    use crate::learning::model::{init_model, ShapeSpec};
    use crate::rng::{rng_substream, Domain};

    fn tiny_data(n: usize, dim: usize, classes: usize, seed: u64) -> Dataset {
        let spec = BlobSpec { num_classes: classes, dim, center_spread: 2.0, noise: 0.5 };
        let mut c = rng_substream(seed, Domain::Dataset, 0, 0);
        let mut s = rng_substream(seed, Domain::Dataset, 1, 0);
        gaussian_blobs(&spec, n, &mut c, &mut s).unwrap()
    }

    #[test]
    fn uniform_prediction_loss_is_ln_classes() {
        let shape = ShapeSpec::mlp(4, &[3], 10).unwrap();
        let model = ModelParams::zeros(shape);
        let data = tiny_data(20, 4, 10, 1);
        let loss = cross_entropy_loss(&model, data.batch()).unwrap();
        assert!((loss - 10f64.ln()).abs() < 1e-12);
        let (eval_loss, acc) = evaluate(&model, &data).unwrap();
        assert!((eval_loss - 10f64.ln()).abs() < 1e-12);
        // all-zero logits tie; lowest index wins → only class 0 rows are right
        assert!((acc - 0.1).abs() < 1e-12);
    }

    #[test]
    fn confident_logits_drive_loss_to_zero() {
        let mut logits = vec![0.0; 10];
        logits[3] = 800.0;
        assert!(sample_loss(&logits, 3) < 1e-300);
        assert!(sample_loss(&logits, 4).is_finite());
    }

    #[test]
    fn batch_loss_is_mean_of_sample_losses() {
        let shape = ShapeSpec::mlp(5, &[4], 3).unwrap();
        let model = init_model(&shape, &mut rng_substream(2, Domain::Init, 0, 0));
        let data = tiny_data(12, 5, 3, 2);
        let whole = cross_entropy_loss(&model, data.batch()).unwrap();
        let mean: f64 = (0..data.len())
            .map(|i| cross_entropy_loss(&model, data.subset(&[i]).batch()).unwrap())
            .sum::<f64>()
            / data.len() as f64;
        assert!((whole - mean).abs() < 1e-12);
    }

    #[test]
    fn last_layer_gradient_closed_form() {
        let shape = ShapeSpec::mlp(3, &[4], 3).unwrap();
        let model = init_model(&shape, &mut rng_substream(4, Domain::Init, 0, 0));
        let data = tiny_data(1, 3, 3, 4);
        let g = gradient(&model, data.batch()).unwrap();
        let cache = forward(&model, &data.features, 1);
        let hidden = {
            let (p, _) = model.split_at(1).unwrap();
            forward(&p, &data.features, 1).output().to_vec()
        };
        let logits = cache.output();
        let lse = log_sum_exp(logits);
        let off = shape.layers()[0].param_count();
        for c in 0..3 {
            let delta = (logits[c] - lse).exp() - if c == data.labels[0] { 1.0 } else { 0.0 };
            for h in 0..4 {
                assert!((g[off + c * 4 + h] - delta * hidden[h]).abs() < 1e-14);
            }
            assert!((g[off + 12 + c] - delta).abs() < 1e-14);
        }
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let shape = ShapeSpec::mlp(4, &[5], 3).unwrap();
        let model = init_model(&shape, &mut rng_substream(6, Domain::Init, 0, 0));
        let data = tiny_data(6, 4, 3, 6);
        let doubled = data.subset(&(0..12).map(|i| i % 6).collect::<Vec<_>>());
        let a = gradient(&model, data.batch()).unwrap();
        let b = gradient(&model, doubled.batch()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let shape = ShapeSpec::mlp(4, &[5], 3).unwrap();
        let model = init_model(&shape, &mut rng_substream(6, Domain::Init, 0, 0));
        let data = tiny_data(30, 4, 3, 6);
        let hyper = TrainingHyper { learning_rate: 0.0, num_classes: 3, ..Default::default() };
        let out = local_train_epoch(&model, &data, &hyper, &mut rng_substream(0, Domain::Shuffle, 0, 0)).unwrap();
        assert_eq!(out, model);
    }

    #[test]
    fn full_batch_epoch_is_one_sgd_step() {
        let shape = ShapeSpec::mlp(4, &[5], 3).unwrap();
        let model = init_model(&shape, &mut rng_substream(7, Domain::Init, 0, 0));
        let data = tiny_data(9, 4, 3, 7);
        let hyper = TrainingHyper { batch_size: 9, learning_rate: 0.1, num_classes: 3, ..Default::default() };
        let mut rng = rng_substream(0, Domain::Shuffle, 0, 0);
        let out = local_train_epoch(&model, &data, &hyper, &mut rng).unwrap();
        let g = gradient(&model, data.batch()).unwrap();
        for ((o, w), gi) in out.values.iter().zip(&model.values).zip(&g) {
            // shuffled order changes summation order only
            assert!((o - (w - 0.1 * gi)).abs() < 1e-14);
        }
    }

    #[test]
    fn split_epoch_is_bit_identical_to_unsplit() {
        let shape = ShapeSpec::mlp(6, &[5, 4], 3).unwrap();
        let model = init_model(&shape, &mut rng_substream(9, Domain::Init, 0, 0));
        let data = tiny_data(37, 6, 3, 9);
        let hyper = TrainingHyper { batch_size: 5, learning_rate: 0.05, num_classes: 3, ..Default::default() };
        let whole = local_train_epoch(&model, &data, &hyper, &mut rng_substream(1, Domain::Shuffle, 2, 3)).unwrap();
        for cut in 1..3 {
            let (p, s) = model.split_at(cut).unwrap();
            let (p2, s2) =
                local_train_epoch_split(&p, &s, &data, &hyper, &mut rng_substream(1, Domain::Shuffle, 2, 3)).unwrap();
            assert_eq!(ModelParams::join(&p2, &s2).unwrap(), whole);
        }
    }

    #[test]
    fn training_reduces_loss_on_separable_blobs() {
        let shape = ShapeSpec::mlp(8, &[16], 4).unwrap();
        let mut model = init_model(&shape, &mut rng_substream(10, Domain::Init, 0, 0));
        let data = tiny_data(200, 8, 4, 10);
        let hyper = TrainingHyper { batch_size: 10, learning_rate: 0.1, num_classes: 4, local_epochs: 1 };
        let before = cross_entropy_loss(&model, data.batch()).unwrap();
        for epoch in 0..20 {
            model = local_train_epoch(&model, &data, &hyper, &mut rng_substream(10, Domain::Shuffle, 0, epoch)).unwrap();
        }
        let after = cross_entropy_loss(&model, data.batch()).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn overfit_single_sample_gets_it_right() {
        let shape = ShapeSpec::mlp(5, &[8], 3).unwrap();
        let mut model = init_model(&shape, &mut rng_substream(12, Domain::Init, 0, 0));
        let data = tiny_data(3, 5, 3, 12).subset(&[2]);
        let hyper = TrainingHyper { batch_size: 1, learning_rate: 0.5, num_classes: 3, local_epochs: 1 };
        for epoch in 0..50 {
            model = local_train_epoch(&model, &data, &hyper, &mut rng_substream(0, Domain::Shuffle, 0, epoch)).unwrap();
        }
        assert_eq!(evaluate(&model, &data).unwrap().1, 1.0);
    }

    #[test]
    fn empty_inputs_are_errors() {
        let shape = ShapeSpec::mlp(2, &[], 2).unwrap();
        let model = ModelParams::zeros(shape);
        let empty = Dataset::new(vec![], vec![], 2, 2).unwrap();
        assert!(cross_entropy_loss(&model, empty.batch()).is_err());
        assert!(evaluate(&model, &empty).is_err());
    }
}
