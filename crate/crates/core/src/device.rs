//! Synthetic hardware cost models.
//!
//! Latency and memory are linear in each layer's output element count, so
//! slots near the input (large feature maps) dominate. Latency is averaged over
//! repeated runs with seeded multiplicative noise.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::scalar::Scalar;
use crate::table::{Estimator, Metric};

pub const DEFAULT_RUNS: usize = 50;

const NS_PER_MS: f64 = 1.0e6;
const BYTES_PER_KB: f64 = 1024.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DeviceProfile<T> {
    pub name: String,
    /// Activation-independent cost, ns per output element.
    pub base_layer_cost: T,
    /// ns per output element for each activation.
    pub per_activation_cost: BTreeMap<ActivationKind, T>,
    /// Bytes per output element for each activation.
    pub memory_per_element: BTreeMap<ActivationKind, T>,
    /// Half-width of the uniform multiplicative noise, as a fraction of the mean.
    pub noise_amplitude: T,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementConfig {
    pub runs: usize,
    /// Overrides the model's input shape (e.g. a reduced resolution for one device).
    pub input_shape: Option<Vec<usize>>,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            runs: DEFAULT_RUNS,
            input_shape: None,
        }
    }
}

impl MeasurementConfig {
    pub fn with_runs(runs: usize) -> Result<Self> {
        if runs == 0 {
            return Err(Error::InvalidProfile("runs must be at least 1".into()));
        }
        Ok(Self {
            runs,
            input_shape: None,
        })
    }

    fn resolve(&self, model: &ModelSpec) -> Result<ModelSpec> {
        if self.runs == 0 {
            return Err(Error::InvalidProfile("runs must be at least 1".into()));
        }
        match &self.input_shape {
            Some(shape) => model.with_input_shape(shape),
            None => Ok(model.clone()),
        }
    }
}

/// Built-in profile names.
pub const BUILTIN_PROFILES: [&str; 4] = ["npu", "jetson-gpu", "cortex-a53", "cortex-a57"];

impl<T: Scalar> DeviceProfile<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(format!("`{}`: {msg}", self.name)));
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return bad("name must be non-empty without whitespace".into());
        }
        if !(self.noise_amplitude >= T::zero() && self.noise_amplitude < T::one()) {
            return bad(format!("noise_amplitude {} outside [0, 1)", self.noise_amplitude));
        }
        if !(self.base_layer_cost >= T::zero() && self.base_layer_cost.is_finite()) {
            return bad("base_layer_cost must be finite and non-negative".into());
        }
        for (label, map) in [
            ("per_activation_cost", &self.per_activation_cost),
            ("memory_per_element", &self.memory_per_element),
        ] {
            for kind in ActivationKind::ALL {
                match map.get(&kind) {
                    None => return bad(format!("{label} has no entry for {kind}")),
                    Some(v) if !(*v >= T::zero() && v.is_finite()) => {
                        return bad(format!("{label}[{kind}] = {v} must be finite and non-negative"))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// One of [`BUILTIN_PROFILES`]. Coefficients are illustrative, not
    /// measurements; every profile orders activation cost
    /// relu < relu6 < leakyrelu < hardswish < silu.
    pub fn builtin(name: &str) -> Result<Self> {
        // (base, [relu, silu, hardswish, relu6, leakyrelu] ns/elem, bytes/elem, noise, seed)
        let (base, cost, mem, noise, seed): (f64, [f64; 5], [f64; 5], f64, u64) = match name {
            "npu" => (0.20, [0.05, 0.60, 0.30, 0.07, 0.10], [1.0, 4.0, 2.0, 1.0, 1.5], 0.02, 11),
            "jetson-gpu" => (0.35, [0.04, 0.30, 0.20, 0.05, 0.08], [2.0, 4.0, 2.5, 2.0, 2.0], 0.05, 13),
            "cortex-a53" => (9.00, [0.80, 7.50, 3.20, 1.00, 1.40], [4.0, 8.0, 6.0, 4.0, 4.0], 0.03, 17),
            "cortex-a57" => (5.50, [0.60, 5.00, 2.40, 0.75, 1.10], [4.0, 8.0, 6.0, 4.0, 4.0], 0.03, 19),
            _ => {
                return Err(Error::InvalidProfile(format!(
                    "unknown built-in profile `{name}` (expected one of {})",
                    BUILTIN_PROFILES.join(", ")
                )))
            }
        };
        let map = |v: [f64; 5]| {
            ActivationKind::ALL
                .into_iter()
                .zip(v)
                .map(|(k, x)| (k, T::of(x)))
                .collect()
        };
        Ok(Self {
            name: name.to_string(),
            base_layer_cost: T::of(base),
            per_activation_cost: map(cost),
            memory_per_element: map(mem),
            noise_amplitude: T::of(noise),
            seed,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let profile: Self = serde_json::from_str(text)?;
        profile.validate()?;
        Ok(profile)
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

    fn coefficient(map: &BTreeMap<ActivationKind, T>, kind: ActivationKind) -> Result<T> {
        map.get(&kind)
            .copied()
            .ok_or_else(|| Error::InvalidProfile(format!("no coefficient for {kind}")))
    }

    /// Noise-free latency in ms.
    pub fn deterministic_latency(&self, model: &ModelSpec) -> Result<T> {
        let mut ns = T::zero();
        for layer in model.layers() {
            let per_element =
                self.base_layer_cost + Self::coefficient(&self.per_activation_cost, layer.activation)?;
            ns = ns + T::of_usize(layer.element_count()) * per_element;
        }
        Ok(ns / T::of(NS_PER_MS))
    }

    /// Mean multiplicative noise factor over `runs`; run `r` draws from the
    /// ChaCha stream `r` of `seed`.
    fn mean_noise_factor(&self, runs: usize) -> T {
        let mut sum = T::zero();
        for run in 0..runs {
            let factor = if self.noise_amplitude == T::zero() {
                T::one()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(run as u64);
                let u: f64 = rng.random_range(-1.0..=1.0);
                T::one() + self.noise_amplitude * T::of(u)
            };
            sum = sum + factor;
        }
        sum / T::of_usize(runs)
    }
}

/// Mean latency in ms over `cfg.runs` simulated runs.
pub fn simulate_latency<T: Scalar>(
    model: &ModelSpec,
    profile: &DeviceProfile<T>,
    cfg: &MeasurementConfig,
) -> Result<T> {
    let model = cfg.resolve(model)?;
    // mean_r(S * f_r) == S * mean_r(f_r); factoring keeps noise-free runs exact
    Ok(profile.deterministic_latency(&model)? * profile.mean_noise_factor(cfg.runs))
}

/// Activation memory in KB (1 KB = 1024 bytes); no noise.
pub fn simulate_memory<T: Scalar>(model: &ModelSpec, profile: &DeviceProfile<T>) -> Result<T> {
    let mut bytes = T::zero();
    for layer in model.layers() {
        let per_element = DeviceProfile::coefficient(&profile.memory_per_element, layer.activation)?;
        bytes = bytes + T::of_usize(layer.element_count()) * per_element;
    }
    Ok(bytes / T::of(BYTES_PER_KB))
}

#[derive(Debug, Clone)]
pub struct LatencyEstimator<T> {
    pub profile: DeviceProfile<T>,
    pub config: MeasurementConfig,
}

impl<T: Scalar> Estimator<T> for LatencyEstimator<T> {
    fn metric(&self) -> Metric {
        Metric::Latency
    }

    fn device(&self) -> &str {
        &self.profile.name
    }

    fn estimate(&self, model: &ModelSpec) -> Result<T> {
        simulate_latency(model, &self.profile, &self.config)
    }
}

#[derive(Debug, Clone)]
pub struct MemoryEstimator<T> {
    pub profile: DeviceProfile<T>,
    pub config: MeasurementConfig,
}

impl<T: Scalar> Estimator<T> for MemoryEstimator<T> {
    fn metric(&self) -> Metric {
        Metric::Memory
    }

    fn device(&self) -> &str {
        &self.profile.name
    }

    fn estimate(&self, model: &ModelSpec) -> Result<T> {
        simulate_memory(&self.config.resolve(model)?, &self.profile)
    }
}
