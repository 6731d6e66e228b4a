//! Direct-arithmetic forward pass that records binary activation codes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::codes::CodeMatrix;
use crate::activation::LeakySlope;
use crate::error::{Error, Result};
use crate::model::{LayerKind, LayerSpec, ModelSpec};
use crate::scalar::Scalar;

/// Default number of samples in a scoring mini-batch.
pub const DEFAULT_BATCH_SIZE: usize = 16;

/// Seeded standard-normal inputs, sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatch<T> {
    shape: Vec<usize>,
    inputs: Vec<Vec<T>>,
    seed: u64,
}

impl<T: Scalar> MiniBatch<T> {
    pub fn generate(shape: &[usize], samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidModel("mini-batch needs at least one sample".into()));
        }
        let len: usize = shape.iter().product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = (0..samples)
            .map(|_| {
                (0..len)
                    .map(|_| T::of(StandardNormal.sample(&mut rng)))
                    .collect()
            })
            .collect();
        Ok(Self {
            shape: shape.to_vec(),
            inputs,
            seed,
        })
    }

    /// Wraps explicit inputs; every sample must have `shape.product()` finite entries.
    pub fn from_inputs(shape: &[usize], inputs: Vec<Vec<T>>, seed: u64) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidModel("mini-batch needs at least one sample".into()));
        }
        let len: usize = shape.iter().product();
        for sample in &inputs {
            if sample.len() != len {
                return Err(Error::ShapeMismatch {
                    expected: shape.to_vec(),
                    got: vec![sample.len()],
                });
            }
            if let Some(bad) = sample.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(bad.to_f64().unwrap_or(f64::NAN)));
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            inputs,
            seed,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn inputs(&self) -> &[Vec<T>] {
        &self.inputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Per-layer weights, Gaussian with standard deviation `1/sqrt(fan_in)`, no bias.
///
/// Dense weights are `[out][in]`, conv weights `[out_c][in_c][ky][kx]`.
/// Weights depend only on topology and seed, never on the activation assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights<T> {
    layers: Vec<Vec<T>>,
    seed: u64,
}

impl<T: Scalar> NetworkWeights<T> {
    pub fn init(model: &ModelSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = model
            .layers()
            .iter()
            .map(|layer| {
                let scale = 1.0 / (layer.fan_in() as f64).sqrt();
                (0..layer.weight_count())
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        T::of(z * scale)
                    })
                    .collect()
            })
            .collect();
        Self { layers, seed }
    }

    /// Wraps explicit weights, one vector per layer in the layout described above.
    pub fn from_layers(model: &ModelSpec, layers: Vec<Vec<T>>, seed: u64) -> Result<Self> {
        if layers.len() != model.len() {
            return Err(Error::TopologyMismatch);
        }
        for (layer, w) in model.layers().iter().zip(&layers) {
            if w.len() != layer.weight_count() {
                return Err(Error::ShapeMismatch {
                    expected: vec![layer.weight_count()],
                    got: vec![w.len()],
                });
            }
        }
        Ok(Self { layers, seed })
    }

    pub fn layer(&self, index: usize) -> &[T] {
        &self.layers[index]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn matches(&self, model: &ModelSpec) -> bool {
        self.layers.len() == model.len()
            && model
                .layers()
                .iter()
                .zip(&self.layers)
                .all(|(l, w)| l.weight_count() == w.len())
    }
}

fn dense_forward<T: Scalar>(layer: &LayerSpec, weights: &[T], input: &[T]) -> Vec<T> {
    let n_in = layer.in_shape[0];
    weights
        .chunks_exact(n_in)
        .map(|row| row.iter().zip(input).map(|(&w, &x)| w * x).sum())
        .collect()
}

fn conv_forward<T: Scalar>(layer: &LayerSpec, weights: &[T], input: &[T]) -> Vec<T> {
    let (c_in, h, w) = (layer.in_shape[0], layer.in_shape[1], layer.in_shape[2]);
    let (c_out, oh, ow) = (layer.out_shape[0], layer.out_shape[1], layer.out_shape[2]);
    let k = layer.kernel.unwrap_or(1);
    let s = layer.stride.unwrap_or(1);
    let p = layer.padding.unwrap_or(0);
    // output columns whose tap `kx` lands inside the input row
    let col_range = |kx: usize| {
        let lo = p.saturating_sub(kx).div_ceil(s);
        let hi = if w + p > kx { ((w + p - kx - 1) / s + 1).min(ow) } else { 0 };
        lo..hi.max(lo)
    };
    let cols: Vec<_> = (0..k).map(col_range).collect();
    let mut out = vec![T::zero(); c_out * oh * ow];
    for (oc, plane) in out.chunks_exact_mut(oh * ow).enumerate() {
        let filter = &weights[oc * c_in * k * k..(oc + 1) * c_in * k * k];
        for ic in 0..c_in {
            let channel = &input[ic * h * w..(ic + 1) * h * w];
            for ky in 0..k {
                for oy in 0..oh {
                    let iy = oy * s + ky;
                    if iy < p || iy - p >= h {
                        continue;
                    }
                    let row = &channel[(iy - p) * w..(iy - p + 1) * w];
                    let out_row = &mut plane[oy * ow..(oy + 1) * ow];
                    for (kx, range) in cols.iter().enumerate() {
                        let wt = filter[(ic * k + ky) * k + kx];
                        for ox in range.clone() {
                            out_row[ox] = out_row[ox] + wt * row[ox * s + kx - p];
                        }
                    }
                }
            }
        }
    }
    out
}

fn layer_forward<T: Scalar>(
    model: &ModelSpec,
    weights: &NetworkWeights<T>,
    index: usize,
    x: &[T],
    slope: LeakySlope<T>,
) -> Result<Vec<T>> {
    let layer = &model.layers()[index];
    let pre = match layer.kind {
        LayerKind::Dense => dense_forward(layer, weights.layer(index), x),
        LayerKind::Conv2d => conv_forward(layer, weights.layer(index), x),
    };
    let out: Vec<T> = pre
        .into_iter()
        .map(|v| layer.activation.eval_unchecked(v, slope))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteActivation { layer: index });
    }
    Ok(out)
}

/// Runs layers `start..` on `x` (the input of layer `start`), appending one
/// bit per activation unit (`output > 0`) to `bits`.
fn forward_from<T: Scalar>(
    model: &ModelSpec,
    weights: &NetworkWeights<T>,
    start: usize,
    x: &[T],
    bits: &mut Vec<bool>,
) -> Result<()> {
    let slope = model.slope::<T>();
    let mut x = x.to_vec();
    for i in start..model.len() {
        x = layer_forward(model, weights, i, &x, slope)?;
        bits.extend(x.iter().map(|&v| v > T::zero()));
    }
    Ok(())
}

fn check_inputs<T: Scalar>(model: &ModelSpec, weights: &NetworkWeights<T>, batch: &MiniBatch<T>) -> Result<()> {
    if batch.shape() != model.input_shape() {
        return Err(Error::ShapeMismatch {
            expected: model.input_shape().to_vec(),
            got: batch.shape().to_vec(),
        });
    }
    if !weights.matches(model) {
        return Err(Error::TopologyMismatch);
    }
    Ok(())
}

/// Forward pass over the whole batch; bit `(n, u)` is set iff unit `u` was
/// strictly positive on sample `n`.
pub fn forward_with_codes<T: Scalar>(
    model: &ModelSpec,
    weights: &NetworkWeights<T>,
    batch: &MiniBatch<T>,
) -> Result<CodeMatrix> {
    check_inputs(model, weights, batch)?;
    let units = model.total_elements();
    let mut rows = Vec::with_capacity(batch.len());
    for sample in batch.inputs() {
        let mut bits = Vec::with_capacity(units);
        forward_from(model, weights, 0, sample, &mut bits)?;
        rows.push(bits);
    }
    CodeMatrix::from_rows(rows)
}

/// Every layer output for every sample: `outputs[sample][layer]`.
#[derive(Debug, Clone)]
pub(crate) struct Trace<T> {
    outputs: Vec<Vec<Vec<T>>>,
}

impl<T: Scalar> Trace<T> {
    pub(crate) fn record(model: &ModelSpec, weights: &NetworkWeights<T>, batch: &MiniBatch<T>) -> Result<Self> {
        check_inputs(model, weights, batch)?;
        let slope = model.slope::<T>();
        let outputs = batch
            .inputs()
            .iter()
            .map(|sample| {
                let mut layers: Vec<Vec<T>> = Vec::with_capacity(model.len());
                for i in 0..model.len() {
                    let x = layers.last().map_or(sample.as_slice(), Vec::as_slice);
                    let out = layer_forward(model, weights, i, x, slope)?;
                    layers.push(out);
                }
                Ok(layers)
            })
            .collect::<Result<_>>()?;
        Ok(Self { outputs })
    }

    /// Codes of `model`, reusing the traced outputs of layers `..start`. The
    /// caller guarantees those layers are identical in the traced model.
    pub(crate) fn resume(
        &self,
        model: &ModelSpec,
        weights: &NetworkWeights<T>,
        batch: &MiniBatch<T>,
        start: usize,
    ) -> Result<CodeMatrix> {
        check_inputs(model, weights, batch)?;
        let units = model.total_elements();
        let mut rows = Vec::with_capacity(batch.len());
        for (sample, layers) in batch.inputs().iter().zip(&self.outputs) {
            let mut bits = Vec::with_capacity(units);
            for out in &layers[..start] {
                bits.extend(out.iter().map(|&v| v > T::zero()));
            }
            let x = if start == 0 { sample } else { &layers[start - 1] };
            forward_from(model, weights, start, x, &mut bits)?;
            rows.push(bits);
        }
        CodeMatrix::from_rows(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind::*;
    use crate::model::SequentialBuilder;

    fn identity_dense(n: usize, act: crate::activation::ActivationKind) -> (ModelSpec, NetworkWeights<f64>) {
        let model = SequentialBuilder::new("id", &[n]).dense("fc", n, act).build().unwrap();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        let weights = NetworkWeights::from_layers(&model, vec![w], 0).unwrap();
        (model, weights)
    }

    #[test]
    fn positive_inputs_give_all_ones() {
        let (model, weights) = identity_dense(4, Relu);
        let batch = MiniBatch::from_inputs(&[4], vec![vec![0.5, 1.0, 2.0, 3.0]], 0).unwrap();
        let codes = forward_with_codes(&model, &weights, &batch).unwrap();
        assert_eq!(codes.row_bits(0), vec![true; 4]);
    }

    #[test]
    fn negative_inputs_give_all_zeros() {
        let (model, weights) = identity_dense(4, Relu);
        let batch = MiniBatch::from_inputs(&[4], vec![vec![-0.5, -1.0, -2.0, -3.0]], 0).unwrap();
        let codes = forward_with_codes(&model, &weights, &batch).unwrap();
        assert_eq!(codes.row_bits(0), vec![false; 4]);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let (model, weights) = identity_dense(4, Relu);
        let batch = MiniBatch::<f64>::generate(&[3], 2, 1).unwrap();
        assert!(matches!(
            forward_with_codes(&model, &weights, &batch),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn overflow_is_reported() {
        let (model, _) = identity_dense(2, Relu);
        let weights = NetworkWeights::from_layers(&model, vec![vec![f64::MAX, f64::MAX, 0.0, 0.0]], 0).unwrap();
        let batch = MiniBatch::from_inputs(&[2], vec![vec![10.0, 10.0]], 0).unwrap();
        assert!(matches!(
            forward_with_codes(&model, &weights, &batch),
            Err(Error::NonFiniteActivation { layer: 0 })
        ));
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = MiniBatch::<f64>::generate(&[3, 4, 4], 16, 9).unwrap();
        let b = MiniBatch::<f64>::generate(&[3, 4, 4], 16, 9).unwrap();
        let c = MiniBatch::<f64>::generate(&[3, 4, 4], 16, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(MiniBatch::<f64>::generate(&[3], 0, 0).is_err());
    }

    #[test]
    fn weights_ignore_the_assignment() {
        let m = SequentialBuilder::new("m", &[2, 5, 5]).conv("c", 3, 3, 1, 0, Silu).unwrap().build().unwrap();
        let r = m.apply_assignment(&[Relu]).unwrap();
        assert_eq!(NetworkWeights::<f64>::init(&m, 4), NetworkWeights::<f64>::init(&r, 4));
    }
}
