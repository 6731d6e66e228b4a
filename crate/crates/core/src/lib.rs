//! Mixed-activation search for layered networks.
//!
//! Each activation slot of a reference network can take one of five
//! activations. Single-slot replacements are benchmarked into latency,
//! accuracy (NWOT zero-cost score) and memory tables, and the tables drive
//! several search strategies that assemble whole-network assignments under a
//! budget:
//!
//! - [`search::lzcm_search`]: per-layer greedy switch on the accuracy proxy
//! - [`search::naive_assignment`]: cheap activations on the first few layers
//! - [`search::random_search`]: seeded rejection sampling
//! - [`search::exact_search`]: branch-and-bound with diverse top-k proposals
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common `f64` instantiations.

pub mod activation;
pub mod device;
pub mod error;
pub mod model;
pub mod nwot;
pub mod report;
pub mod scalar;
pub mod search;
pub mod table;

pub use activation::{eval_activation, ActivationKind, LeakySlope};
pub use device::{simulate_latency, simulate_memory, DeviceProfile, MeasurementConfig};
pub use error::{Error, Result};
pub use model::{enumerate_single_replacements, LayerKind, LayerSpec, ModelSpec, SequentialBuilder};
pub use nwot::{accuracy_delta, forward_with_codes, nwot_score, CodeMatrix, MiniBatch, NwotScore, NwotScorer};
pub use scalar::Scalar;
pub use search::{Budget, Method, Proposal, SearchConstraints, SearchProblem, SearchReport};
pub use table::{build_table, improvement_pct, CostEntry, CostMatrix, CostTable, Estimator, Metric};

pub type CostTable64 = CostTable<f64>;
pub type CostMatrix64 = CostMatrix<f64>;
pub type DeviceProfile64 = DeviceProfile<f64>;
pub type Proposal64 = Proposal<f64>;
pub type SearchProblem64 = SearchProblem<f64>;
pub type SearchReport64 = SearchReport<f64>;
pub type NwotScorer64 = NwotScorer<f64>;
pub type ReportTable64 = report::ReportTable<f64>;

pub type CostTable32 = CostTable<f32>;
pub type CostMatrix32 = CostMatrix<f32>;
pub type SearchProblem32 = SearchProblem<f32>;
pub type NwotScorer32 = NwotScorer<f32>;
