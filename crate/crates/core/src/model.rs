//! Layered network description whose activation slots are searched.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationKind, LeakySlope, DEFAULT_LEAKY_SLOPE};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Dense,
    Conv2d,
}

/// One layer followed by exactly one activation slot.
///
/// Conv shapes are `[channels, height, width]`, dense shapes are `[width]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub index: usize,
    pub name: String,
    pub kind: LayerKind,
    pub in_shape: Vec<usize>,
    pub out_shape: Vec<usize>,
    #[serde(default)]
    pub kernel: Option<usize>,
    #[serde(default)]
    pub stride: Option<usize>,
    #[serde(default)]
    pub padding: Option<usize>,
    pub activation: ActivationKind,
}

impl LayerSpec {
    pub fn dense(
        index: usize,
        name: impl Into<String>,
        inputs: usize,
        outputs: usize,
        activation: ActivationKind,
    ) -> Self {
        Self {
            index,
            name: name.into(),
            kind: LayerKind::Dense,
            in_shape: vec![inputs],
            out_shape: vec![outputs],
            kernel: None,
            stride: None,
            padding: None,
            activation,
        }
    }

    /// Builds a conv layer, deriving the output shape from the input shape.
    pub fn conv2d(
        index: usize,
        name: impl Into<String>,
        in_shape: [usize; 3],
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        activation: ActivationKind,
    ) -> Result<Self> {
        let [_, h, w] = in_shape;
        let oh = conv_out_dim(h, kernel, stride, padding)?;
        let ow = conv_out_dim(w, kernel, stride, padding)?;
        Ok(Self {
            index,
            name: name.into(),
            kind: LayerKind::Conv2d,
            in_shape: in_shape.to_vec(),
            out_shape: vec![out_channels, oh, ow],
            kernel: Some(kernel),
            stride: Some(stride),
            padding: Some(padding),
            activation,
        })
    }

    /// Number of scalar activation outputs of this layer.
    pub fn element_count(&self) -> usize {
        self.out_shape.iter().product()
    }

    pub fn input_len(&self) -> usize {
        self.in_shape.iter().product()
    }

    /// Inputs feeding one output unit.
    pub fn fan_in(&self) -> usize {
        match self.kind {
            LayerKind::Dense => self.in_shape[0],
            LayerKind::Conv2d => {
                let k = self.kernel.unwrap_or(1);
                self.in_shape[0] * k * k
            }
        }
    }

    /// Number of weights (no bias).
    pub fn weight_count(&self) -> usize {
        match self.kind {
            LayerKind::Dense => self.in_shape[0] * self.out_shape[0],
            LayerKind::Conv2d => self.out_shape[0] * self.fan_in(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(format!("layer `{}`: {msg}", self.name)));
        if self.in_shape.iter().chain(&self.out_shape).any(|&d| d == 0) {
            return bad("zero-sized dimension".into());
        }
        match self.kind {
            LayerKind::Dense => {
                if self.in_shape.len() != 1 || self.out_shape.len() != 1 {
                    return bad("dense shapes must be one-dimensional".into());
                }
            }
            LayerKind::Conv2d => {
                if self.in_shape.len() != 3 || self.out_shape.len() != 3 {
                    return bad("conv2d shapes must be [channels, height, width]".into());
                }
                let (Some(k), Some(s)) = (self.kernel, self.stride) else {
                    return bad("conv2d needs kernel and stride".into());
                };
                let p = self.padding.unwrap_or(0);
                let oh = conv_out_dim(self.in_shape[1], k, s, p)?;
                let ow = conv_out_dim(self.in_shape[2], k, s, p)?;
                if self.out_shape[1] != oh || self.out_shape[2] != ow {
                    return bad(format!(
                        "output {:?} inconsistent with kernel {k}, stride {s}, padding {p} (expected [_, {oh}, {ow}])",
                        self.out_shape
                    ));
                }
            }
        }
        Ok(())
    }
}

fn conv_out_dim(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if kernel == 0 || stride == 0 {
        return Err(Error::InvalidModel("kernel and stride must be positive".into()));
    }
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::InvalidModel(format!(
            "kernel {kernel} larger than padded input {padded}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Ordered layers plus the LeakyReLU slope shared by every LeakyReLU slot.
///
/// The activation assignment lives on the layers, so its length always matches
/// the layer count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct ModelSpec {
    name: String,
    layers: Vec<LayerSpec>,
    leaky_slope: f64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    name: String,
    layers: Vec<LayerSpec>,
    #[serde(default = "default_slope")]
    leaky_slope: f64,
}

fn default_slope() -> f64 {
    DEFAULT_LEAKY_SLOPE
}

impl TryFrom<ModelFile> for ModelSpec {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        ModelSpec::new(file.name, file.layers, file.leaky_slope)
    }
}

impl From<ModelSpec> for ModelFile {
    fn from(m: ModelSpec) -> Self {
        ModelFile {
            name: m.name,
            layers: m.layers,
            leaky_slope: m.leaky_slope,
        }
    }
}

impl ModelSpec {
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>, leaky_slope: f64) -> Result<Self> {
        let model = Self {
            name: name.into(),
            layers,
            leaky_slope,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidModel("model has no layers".into()));
        }
        LeakySlope::new(self.leaky_slope)?;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.index != i {
                return Err(Error::InvalidModel(format!(
                    "layer indices must be contiguous from 0; position {i} has index {}",
                    layer.index
                )));
            }
            layer.validate()?;
        }
        for pair in self.layers.windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            let ok = match next.kind {
                LayerKind::Conv2d => prev.out_shape == next.in_shape,
                // dense layers flatten their input
                LayerKind::Dense => prev.element_count() == next.input_len(),
            };
            if !ok {
                return Err(Error::InvalidModel(format!(
                    "layer `{}` expects input {:?} but `{}` produces {:?}",
                    next.name, next.in_shape, prev.name, prev.out_shape
                )));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn leaky_slope(&self) -> f64 {
        self.leaky_slope
    }

    pub fn slope<T: Scalar>(&self) -> LeakySlope<T> {
        LeakySlope::new(T::of(self.leaky_slope)).unwrap_or_default()
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.layers[0].in_shape
    }

    pub fn assignment(&self) -> Vec<ActivationKind> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    /// Per-layer output element counts, the driver of every cost model.
    pub fn element_counts(&self) -> Vec<usize> {
        self.layers.iter().map(LayerSpec::element_count).collect()
    }

    /// Total number of activation units across all slots.
    pub fn total_elements(&self) -> usize {
        self.layers.iter().map(LayerSpec::element_count).sum()
    }

    /// Same topology, including shapes and layer names.
    pub fn same_topology(&self, other: &ModelSpec) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.name == b.name
                    && a.kind == b.kind
                    && a.in_shape == b.in_shape
                    && a.out_shape == b.out_shape
                    && a.kernel == b.kernel
                    && a.stride == b.stride
                    && a.padding == b.padding
            })
    }

    pub fn apply_assignment(&self, assignment: &[ActivationKind]) -> Result<ModelSpec> {
        if assignment.len() != self.layers.len() {
            return Err(Error::AssignmentLength {
                expected: self.layers.len(),
                got: assignment.len(),
            });
        }
        let mut out = self.clone();
        for (layer, &kind) in out.layers.iter_mut().zip(assignment) {
            layer.activation = kind;
        }
        Ok(out)
    }

    /// Copy with a single slot replaced.
    pub fn with_activation(&self, layer: usize, kind: ActivationKind) -> Result<ModelSpec> {
        if layer >= self.layers.len() {
            return Err(Error::InvalidModel(format!(
                "layer {layer} out of range for {} layers",
                self.layers.len()
            )));
        }
        let mut out = self.clone();
        out.layers[layer].activation = kind;
        Ok(out)
    }

    /// Re-derives every shape for a new input shape (e.g. a smaller input
    /// resolution on a memory-limited device).
    pub fn with_input_shape(&self, input: &[usize]) -> Result<ModelSpec> {
        if input == self.input_shape() {
            return Ok(self.clone());
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        for layer in &self.layers {
            let next = match layer.kind {
                LayerKind::Conv2d => {
                    if current.len() != 3 || current[0] != layer.in_shape[0] {
                        return Err(Error::ShapeMismatch {
                            expected: layer.in_shape.clone(),
                            got: current,
                        });
                    }
                    LayerSpec::conv2d(
                        layer.index,
                        layer.name.clone(),
                        [current[0], current[1], current[2]],
                        layer.out_shape[0],
                        layer.kernel.unwrap_or(1),
                        layer.stride.unwrap_or(1),
                        layer.padding.unwrap_or(0),
                        layer.activation,
                    )?
                }
                LayerKind::Dense => {
                    let flat: usize = current.iter().product();
                    if flat != layer.in_shape[0] {
                        return Err(Error::ShapeMismatch {
                            expected: layer.in_shape.clone(),
                            got: current,
                        });
                    }
                    layer.clone()
                }
            };
            current = next.out_shape.clone();
            layers.push(next);
        }
        ModelSpec::new(self.name.clone(), layers, self.leaky_slope)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

/// Incrementally builds a sequential model, chaining shapes automatically.
#[derive(Debug, Clone)]
pub struct SequentialBuilder {
    name: String,
    current: Vec<usize>,
    layers: Vec<LayerSpec>,
    leaky_slope: f64,
}

impl SequentialBuilder {
    pub fn new(name: impl Into<String>, input_shape: &[usize]) -> Self {
        Self {
            name: name.into(),
            current: input_shape.to_vec(),
            layers: Vec::new(),
            leaky_slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub fn leaky_slope(mut self, slope: f64) -> Self {
        self.leaky_slope = slope;
        self
    }

    pub fn conv(
        mut self,
        name: impl Into<String>,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        activation: ActivationKind,
    ) -> Result<Self> {
        let [c, h, w] = <[usize; 3]>::try_from(self.current.as_slice()).map_err(|_| {
            Error::InvalidModel(format!("conv layer needs a 3-d input, have {:?}", self.current))
        })?;
        let layer = LayerSpec::conv2d(
            self.layers.len(),
            name,
            [c, h, w],
            out_channels,
            kernel,
            stride,
            padding,
            activation,
        )?;
        self.current = layer.out_shape.clone();
        self.layers.push(layer);
        Ok(self)
    }

    pub fn dense(mut self, name: impl Into<String>, outputs: usize, activation: ActivationKind) -> Self {
        let inputs = self.current.iter().product();
        let layer = LayerSpec::dense(self.layers.len(), name, inputs, outputs, activation);
        self.current = layer.out_shape.clone();
        self.layers.push(layer);
        self
    }

    pub fn build(self) -> Result<ModelSpec> {
        ModelSpec::new(self.name, self.layers, self.leaky_slope)
    }
}

/// A reference model with one slot replaced.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleReplacement {
    pub layer: usize,
    pub activation: ActivationKind,
    pub model: ModelSpec,
    /// The replacement equals the reference activation at this slot.
    pub identity: bool,
}

/// Normalizes a candidate set to the fixed column order without duplicates.
pub fn normalize_candidates(candidates: &[ActivationKind]) -> Result<Vec<ActivationKind>> {
    let mut out = candidates.to_vec();
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    Ok(out)
}

/// Every model that differs from `model` in at most one slot, layer-major,
/// candidates in column order. Identity replacements are included, so the
/// result always has `layers × candidates` entries.
pub fn enumerate_single_replacements(
    model: &ModelSpec,
    candidates: &[ActivationKind],
) -> Result<Vec<SingleReplacement>> {
    if model.is_empty() {
        return Err(Error::InvalidModel("model has no layers".into()));
    }
    let candidates = normalize_candidates(candidates)?;
    let mut out = Vec::with_capacity(model.len() * candidates.len());
    for layer in 0..model.len() {
        let reference = model.layers[layer].activation;
        for &activation in &candidates {
            out.push(SingleReplacement {
                layer,
                activation,
                model: model.with_activation(layer, activation)?,
                identity: activation == reference,
            });
        }
    }
    Ok(out)
}
