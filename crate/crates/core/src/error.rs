use thiserror::Error;

use crate::activation::ActivationKind;
use crate::table::Metric;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {0} where a finite number is required")]
    NonFinite(f64),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("assignment has {got} slots but the model has {expected} layers")]
    AssignmentLength { expected: usize, got: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("non-finite intermediate value in layer {layer}")]
    NonFiniteActivation { layer: usize },

    #[error("candidate set is empty")]
    EmptyCandidates,

    #[error("models do not share a topology")]
    TopologyMismatch,

    #[error("estimator failed on layer {layer} with activation {activation}: {reason}")]
    Estimator {
        layer: usize,
        activation: ActivationKind,
        reason: String,
    },

    #[error("cost table is missing entry (layer {layer}, {activation})")]
    MissingEntry {
        layer: usize,
        activation: ActivationKind,
    },

    #[error("invalid cost table: {0}")]
    InvalidTable(String),

    #[error("no {metric} matrix supplied")]
    MissingMatrix { metric: Metric },

    #[error("invalid device profile: {0}")]
    InvalidProfile(String),

    #[error("invalid search configuration: {0}")]
    InvalidSearch(String),

    #[error("activation {0} is not a column of the cost matrix")]
    UnknownColumn(ActivationKind),

    #[error("no feasible assignment satisfies the budget")]
    NoSolution,

    #[error("reference value must be positive, got {0}")]
    NonPositiveReference(f64),

    #[error("unknown baseline `{0}`")]
    UnknownBaseline(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
