//! Flat-parameter multilayer perceptron with tanh hidden units and a linear
//! output layer feeding softmax cross-entropy.
//!
//! Parameters of each dense layer are laid out as a row-major
//! `fan_out × fan_in` weight block followed by `fan_out` biases. A model can
//! be cut between layers into a user-side prefix and a server-side suffix;
//! both halves run through the same layer kernels as the whole model, so a
//! split forward/backward pass is bit-identical to the unsplit one.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Tanh,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        self.fan_in * self.fan_out + self.fan_out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeSpec {
    layers: Vec<LayerSpec>,
}

impl ShapeSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("model has no layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.fan_in == 0 || l.fan_out == 0 {
                return Err(Error::invalid(format!("layer {i} has a zero dimension")));
            }
        }
        for w in layers.windows(2) {
            if w[0].fan_out != w[1].fan_in {
                return Err(Error::invalid(format!(
                    "layer widths do not chain: {} -> {}",
                    w[0].fan_out, w[1].fan_in
                )));
            }
        }
        Ok(Self { layers })
    }

    /// `input → hidden… → classes`, tanh on hidden layers, linear output.
    pub fn mlp(input_dim: usize, hidden: &[usize], num_classes: usize) -> Result<Self> {
        let mut widths = vec![input_dim];
        widths.extend_from_slice(hidden);
        widths.push(num_classes);
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                fan_in: w[0],
                fan_out: w[1],
                activation: if i == last { Activation::Identity } else { Activation::Tanh },
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out
    }

    /// Width of the activation produced by the first `cut` layers.
    pub fn cut_width(&self, cut: usize) -> usize {
        self.layers[cut - 1].fan_out
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.layers.len() + 1);
        let mut acc = 0;
        out.push(0);
        for l in &self.layers {
            acc += l.param_count();
            out.push(acc);
        }
        out
    }

    pub fn check_cut(&self, cut: usize) -> Result<()> {
        if cut == 0 || cut >= self.layers.len() {
            return Err(Error::invalid(format!(
                "cut layer must be in 1..{} (got {cut})",
                self.layers.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub values: Vec<f64>,
    pub shape: ShapeSpec,
}

impl ModelParams {
    pub fn from_values(shape: ShapeSpec, values: Vec<f64>) -> Result<Self> {
        let expected = shape.param_count();
        if values.len() != expected {
            return Err(Error::ShapeMismatch { expected, actual: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("model parameters must be finite"));
        }
        Ok(Self { values, shape })
    }

    pub fn zeros(shape: ShapeSpec) -> Self {
        let values = vec![0.0; shape.param_count()];
        Self { values, shape }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layer_slice(&self, layer: usize) -> &[f64] {
        let off = self.shape.offsets();
        &self.values[off[layer]..off[layer + 1]]
    }

    /// Splits into (user-side prefix, server-side suffix) after `cut` layers.
    pub fn split_at(&self, cut: usize) -> Result<(ModelParams, ModelParams)> {
        self.shape.check_cut(cut)?;
        let boundary = self.shape.offsets()[cut];
        let prefix = ModelParams {
            values: self.values[..boundary].to_vec(),
            shape: ShapeSpec { layers: self.shape.layers[..cut].to_vec() },
        };
        let suffix = ModelParams {
            values: self.values[boundary..].to_vec(),
            shape: ShapeSpec { layers: self.shape.layers[cut..].to_vec() },
        };
        Ok((prefix, suffix))
    }

    pub fn join(prefix: &ModelParams, suffix: &ModelParams) -> Result<ModelParams> {
        let mut layers = prefix.shape.layers.clone();
        layers.extend_from_slice(&suffix.shape.layers);
        let shape = ShapeSpec::new(layers)?;
        let mut values = prefix.values.clone();
        values.extend_from_slice(&suffix.values);
        Ok(ModelParams { values, shape })
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_model<R: Rng + ?Sized>(shape: &ShapeSpec, rng: &mut R) -> ModelParams {
    let mut values = Vec::with_capacity(shape.param_count());
    for l in shape.layers() {
        let limit = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
        for _ in 0..l.fan_in * l.fan_out {
            values.push(rng.random_range(-limit..limit));
        }
        values.extend(std::iter::repeat_n(0.0, l.fan_out));
    }
    ModelParams { values, shape: shape.clone() }
}

/// Per-layer activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    batch: usize,
    /// `inputs[l]` is the input to layer `l`; the last entry is the output.
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds at least the input")
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

fn dense_forward(layer: &LayerSpec, params: &[f64], input: &[f64], batch: usize) -> Vec<f64> {
    let (fi, fo) = (layer.fan_in, layer.fan_out);
    let (weights, bias) = params.split_at(fi * fo);
    let mut out = vec![0.0; batch * fo];
    for b in 0..batch {
        let x = &input[b * fi..(b + 1) * fi];
        let row_out = &mut out[b * fo..(b + 1) * fo];
        for (o, y) in row_out.iter_mut().enumerate() {
            let w = &weights[o * fi..(o + 1) * fi];
            let mut acc = bias[o];
            for (wi, xi) in w.iter().zip(x) {
                acc += wi * xi;
            }
            *y = match layer.activation {
                Activation::Tanh => acc.tanh(),
                Activation::Identity => acc,
            };
        }
    }
    out
}

/// Runs `model` on a row-major `batch × input_dim` block.
pub fn forward(model: &ModelParams, input: &[f64], batch: usize) -> ForwardCache {
    debug_assert_eq!(input.len(), batch * model.shape.input_dim());
    let offsets = model.shape.offsets();
    let mut activations = Vec::with_capacity(model.shape.layers.len() + 1);
    activations.push(input.to_vec());
    for (l, layer) in model.shape.layers.iter().enumerate() {
        let params = &model.values[offsets[l]..offsets[l + 1]];
        let next = dense_forward(layer, params, activations.last().unwrap(), batch);
        activations.push(next);
    }
    ForwardCache { batch, activations }
}

/// Backpropagates `d_output` (gradient w.r.t. the model output) and returns
/// the parameter gradient and the gradient w.r.t. the model input.
pub fn backward(model: &ModelParams, cache: &ForwardCache, d_output: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let offsets = model.shape.offsets();
    let batch = cache.batch;
    let mut grad = vec![0.0; model.values.len()];
    let mut d_act = d_output.to_vec();
    for (l, layer) in model.shape.layers.iter().enumerate().rev() {
        let (fi, fo) = (layer.fan_in, layer.fan_out);
        let out = &cache.activations[l + 1];
        let input = &cache.activations[l];
        let d_pre: Vec<f64> = match layer.activation {
            Activation::Tanh => d_act.iter().zip(out).map(|(d, y)| d * (1.0 - y * y)).collect(),
            Activation::Identity => d_act,
        };
        let params = &model.values[offsets[l]..offsets[l + 1]];
        let (weights, _) = params.split_at(fi * fo);
        let g = &mut grad[offsets[l]..offsets[l + 1]];
        let (gw, gb) = g.split_at_mut(fi * fo);
        let mut d_in = vec![0.0; batch * fi];
        for b in 0..batch {
            let x = &input[b * fi..(b + 1) * fi];
            let dz = &d_pre[b * fo..(b + 1) * fo];
            let dx = &mut d_in[b * fi..(b + 1) * fi];
            for o in 0..fo {
                let dzo = dz[o];
                gb[o] += dzo;
                let gw_row = &mut gw[o * fi..(o + 1) * fi];
                let w_row = &weights[o * fi..(o + 1) * fi];
                for i in 0..fi {
                    gw_row[i] += dzo * x[i];
                    dx[i] += dzo * w_row[i];
                }
            }
        }
        d_act = d_in;
    }
    (grad, d_act)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{rng_substream, Domain};

    #[test]
    fn reference_mlp_param_count() {
        let shape = ShapeSpec::mlp(784, &[32], 10).unwrap();
        assert_eq!(shape.param_count(), 25_450);
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let shape = ShapeSpec::mlp(8, &[5, 4], 3).unwrap();
        let a = init_model(&shape, &mut rng_substream(3, Domain::Init, 0, 0));
        let b = init_model(&shape, &mut rng_substream(3, Domain::Init, 0, 0));
        assert_eq!(a, b);
        for (l, spec) in shape.layers().iter().enumerate() {
            let s = a.layer_slice(l);
            assert!(s[spec.fan_in * spec.fan_out..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn init_weight_variance_matches_uniform() {
        // one 400×250 layer: 1e5 weights, Var U(-L, L) = L²/3
        let shape = ShapeSpec::mlp(400, &[], 250).unwrap();
        let m = init_model(&shape, &mut rng_substream(8, Domain::Init, 0, 0));
        let w = &m.values[..400 * 250];
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let limit2 = 6.0 / 650.0;
        assert!((var / (limit2 / 3.0) - 1.0).abs() < 0.1);
    }

    #[test]
    fn split_and_join_roundtrip() {
        let shape = ShapeSpec::mlp(6, &[4, 3], 2).unwrap();
        let m = init_model(&shape, &mut rng_substream(1, Domain::Init, 0, 0));
        for cut in 1..3 {
            let (p, s) = m.split_at(cut).unwrap();
            assert_eq!(p.len() + s.len(), m.len());
            assert_eq!(ModelParams::join(&p, &s).unwrap(), m);
        }
        assert!(m.split_at(0).is_err());
        assert!(m.split_at(3).is_err());
    }

    #[test]
    fn rejects_bad_lengths() {
        let shape = ShapeSpec::mlp(2, &[], 2).unwrap();
        assert!(matches!(
            ModelParams::from_values(shape, vec![0.0; 5]),
            Err(Error::ShapeMismatch { expected: 6, actual: 5 })
        ));
    }
}
