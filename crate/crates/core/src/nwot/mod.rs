//! Training-free accuracy proxy: log-determinant of the Hamming similarity
//! kernel over binary activation codes of a random mini-batch.
//!
//! A unit's bit is set when its activation output is strictly positive. For
//! ReLU-family activations that is the usual "unit is active" code; SiLU and
//! Hardswish use the same output-sign rule.

mod codes;
mod forward;

pub use codes::CodeMatrix;
pub use forward::{forward_with_codes, MiniBatch, NetworkWeights, DEFAULT_BATCH_SIZE};

use std::sync::OnceLock;

use forward::Trace;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::scalar::Scalar;

/// Kernel log-determinant. Degenerate scores carry `-inf` so they rank below
/// every finite score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NwotScore<T> {
    pub value: T,
    pub degenerate: bool,
}

impl<T: Scalar> NwotScore<T> {
    pub fn degenerate() -> Self {
        Self {
            value: T::neg_infinity(),
            degenerate: true,
        }
    }

    pub fn finite(value: T) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }
}

/// Sign and log-magnitude of `det(a)` by LU with partial pivoting, or `None`
/// when a pivot falls below the singularity tolerance.
pub fn log_abs_det<T: Scalar>(mut a: Vec<Vec<T>>) -> Option<(T, T)> {
    let n = a.len();
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if n == 0 {
        return Some((T::one(), T::zero()));
    }
    if scale == T::zero() {
        return None;
    }
    let tol = T::of_usize(8 * n) * T::epsilon() * scale;
    let mut sign = T::one();
    let mut log = T::zero();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        let pivot = a[pivot_row][col];
        if !(pivot.abs() > tol) {
            return None;
        }
        if pivot_row != col {
            a.swap(pivot_row, col);
            sign = -sign;
        }
        if pivot < T::zero() {
            sign = -sign;
        }
        log = log + pivot.abs().ln();
        for row in col + 1..n {
            let factor = a[row][col] / pivot;
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] = a[row][k] - factor * v;
            }
        }
    }
    Some((sign, log))
}

/// `log|det K|` with `K[i][j] = units - hamming(i, j)`.
pub fn nwot_score<T: Scalar>(codes: &CodeMatrix) -> NwotScore<T> {
    let kernel: Vec<Vec<T>> = codes
        .kernel()
        .into_iter()
        .map(|row| row.into_iter().map(T::of_usize).collect())
        .collect();
    match log_abs_det(kernel) {
        Some((sign, log)) if sign > T::zero() && log.is_finite() => NwotScore::finite(log),
        _ => NwotScore::degenerate(),
    }
}

/// `candidate - reference` with sentinel handling: a degenerate candidate
/// against a finite reference is `-inf`, the reverse is `+inf`, and two
/// degenerate scores compare equal.
pub fn score_delta<T: Scalar>(reference: T, candidate: T) -> T {
    if reference.is_infinite() && candidate == reference {
        T::zero()
    } else {
        candidate - reference
    }
}

/// Scores models sharing one topology against a fixed batch and fixed weights.
///
/// The reference forward pass is recorded on first use; a candidate resumes
/// from it at its first slot that differs from the reference.
#[derive(Debug, Clone)]
pub struct NwotScorer<T> {
    reference: ModelSpec,
    weights: NetworkWeights<T>,
    batch: MiniBatch<T>,
    trace: OnceLock<Option<Trace<T>>>,
}

impl<T: Scalar> NwotScorer<T> {
    pub fn new(reference: &ModelSpec, batch_size: usize, weight_seed: u64, batch_seed: u64) -> Result<Self> {
        let batch = MiniBatch::generate(reference.input_shape(), batch_size, batch_seed)?;
        Ok(Self {
            reference: reference.clone(),
            weights: NetworkWeights::init(reference, weight_seed),
            batch,
            trace: OnceLock::new(),
        })
    }

    pub fn with_batch(reference: &ModelSpec, batch: MiniBatch<T>, weight_seed: u64) -> Self {
        Self {
            reference: reference.clone(),
            weights: NetworkWeights::init(reference, weight_seed),
            batch,
            trace: OnceLock::new(),
        }
    }

    pub fn weight_seed(&self) -> u64 {
        self.weights.seed()
    }

    pub fn batch_seed(&self) -> u64 {
        self.batch.seed()
    }

    pub fn batch(&self) -> &MiniBatch<T> {
        &self.batch
    }

    pub fn codes(&self, model: &ModelSpec) -> Result<CodeMatrix> {
        if !model.same_topology(&self.reference) {
            return Err(Error::TopologyMismatch);
        }
        if model.leaky_slope() != self.reference.leaky_slope() {
            return forward_with_codes(model, &self.weights, &self.batch);
        }
        let trace = self
            .trace
            .get_or_init(|| Trace::record(&self.reference, &self.weights, &self.batch).ok());
        match trace {
            Some(trace) => {
                let start = model
                    .layers()
                    .iter()
                    .zip(self.reference.layers())
                    .position(|(a, b)| a.activation != b.activation)
                    .unwrap_or(model.len());
                trace.resume(model, &self.weights, &self.batch, start)
            }
            // the reference itself fails; a full pass reports the error for this model
            None => forward_with_codes(model, &self.weights, &self.batch),
        }
    }

    pub fn score(&self, model: &ModelSpec) -> Result<NwotScore<T>> {
        Ok(nwot_score(&self.codes(model)?))
    }
}

/// Accuracy delta of `candidate` relative to `reference`, positive when the
/// candidate scores better. Identical assignments return exactly zero.
pub fn accuracy_delta<T: Scalar>(
    reference: &ModelSpec,
    candidate: &ModelSpec,
    batch: &MiniBatch<T>,
    weight_seed: u64,
) -> Result<T> {
    if !reference.same_topology(candidate) {
        return Err(Error::TopologyMismatch);
    }
    if reference.assignment() == candidate.assignment() {
        return Ok(T::zero());
    }
    let scorer = NwotScorer::with_batch(reference, batch.clone(), weight_seed);
    let r = scorer.score(reference)?;
    let c = scorer.score(candidate)?;
    Ok(score_delta(r.value, c.value))
}
