//! Assignment search over cost matrices.
//!
//! All strategies work on positive-is-worse costs: latency and memory deltas
//! are used as-is, accuracy deltas are negated. A budget bounds the summed cost
//! of the budget metric, so an accuracy budget of `0.5` allows at most 0.5 NWOT
//! units of total accuracy loss. Choices whose cost is `+inf` (for example a
//! degenerate NWOT score) are never selected.

mod exact;
mod lzcm;
mod naive;
mod random;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use exact::{exact_search, ExactOutcome, DEFAULT_DIVERSITY, DEFAULT_TOP_K};
pub use lzcm::lzcm_search;
pub use naive::{naive_assignment, NaiveConfig};
pub use random::{random_search, DEFAULT_ITERATIONS, REJECTION_CAP};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::table::{CostMatrix, Metric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[serde(bound = "T: Scalar")]
pub enum Budget<T> {
    Unbounded,
    AtMost(T),
}

impl<T: Scalar> Budget<T> {
    pub fn allows(&self, cost: T) -> bool {
        match *self {
            Budget::Unbounded => true,
            Budget::AtMost(limit) => cost <= limit,
        }
    }

    pub fn limit(&self) -> Option<T> {
        match *self {
            Budget::Unbounded => None,
            Budget::AtMost(limit) => Some(limit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SearchConstraints<T> {
    pub objective: Metric,
    pub budget_metric: Metric,
    pub budget: Budget<T>,
}

impl<T: Scalar> SearchConstraints<T> {
    pub fn new(objective: Metric, budget_metric: Metric, budget: Budget<T>) -> Result<Self> {
        if objective == budget_metric {
            return Err(Error::InvalidSearch(format!(
                "objective and budget metric are both {objective}"
            )));
        }
        if let Budget::AtMost(v) = budget {
            if v.is_nan() {
                return Err(Error::InvalidSearch("budget is NaN".into()));
            }
        }
        Ok(Self {
            objective,
            budget_metric,
            budget,
        })
    }
}

/// A candidate assignment with its predicted metric totals and search costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Proposal<T> {
    /// 1-based position in the returned list.
    pub rank: usize,
    pub assignment: Vec<ActivationKind>,
    /// `reference_total + Σ deltas` of the objective metric.
    pub objective_total: T,
    /// `reference_total + Σ deltas` of the budget metric, when one was supplied.
    pub budget_total: Option<T>,
    /// Summed positive-is-worse objective cost the search minimized.
    pub objective_cost: T,
    /// Summed positive-is-worse budget cost compared against the budget.
    pub budget_cost: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lzcm,
    Naive,
    Random,
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lzcm => "lzcm",
            Method::Naive => "naive",
            Method::Random => "random",
            Method::Exact => "exact",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lzcm" => Ok(Method::Lzcm),
            "naive" => Ok(Method::Naive),
            "random" => Ok(Method::Random),
            "exact" | "ilp" => Ok(Method::Exact),
            _ => Err(Error::Parse(format!("unknown search method `{s}`"))),
        }
    }
}

/// Serialized search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SearchReport<T> {
    pub method: Method,
    pub device: String,
    pub constraints: Option<SearchConstraints<T>>,
    pub proposals: Vec<Proposal<T>>,
    pub truncated: bool,
}

/// Validated objective/budget pair with precomputed per-cell costs.
#[derive(Debug, Clone)]
pub struct SearchProblem<T> {
    objective: CostMatrix<T>,
    budget_matrix: Option<CostMatrix<T>>,
    budget: Budget<T>,
    objective_cost: Vec<Vec<T>>,
    budget_cost: Vec<Vec<T>>,
}

impl<T: Scalar> SearchProblem<T> {
    pub fn new(objective: CostMatrix<T>, budget_matrix: Option<CostMatrix<T>>, budget: Budget<T>) -> Result<Self> {
        if objective.layers() == 0 || objective.columns.is_empty() {
            return Err(Error::InvalidSearch("objective matrix is empty".into()));
        }
        if let Some(b) = &budget_matrix {
            if b.metric == objective.metric {
                return Err(Error::InvalidSearch(format!(
                    "objective and budget metric are both {}",
                    b.metric
                )));
            }
            if b.layers() != objective.layers() || b.columns != objective.columns {
                return Err(Error::InvalidSearch(
                    "objective and budget matrices have different shapes".into(),
                ));
            }
        } else if budget != Budget::Unbounded {
            return Err(Error::InvalidSearch("a finite budget needs a budget matrix".into()));
        }
        let costs = |m: &CostMatrix<T>| -> Result<Vec<Vec<T>>> {
            m.values
                .iter()
                .enumerate()
                .map(|(l, row)| {
                    row.iter()
                        .map(|&d| {
                            let c = m.metric.cost_of(d);
                            if c.is_nan() || c == T::neg_infinity() {
                                Err(Error::InvalidSearch(format!(
                                    "{} matrix has unusable value {d} at layer {l}",
                                    m.metric
                                )))
                            } else {
                                Ok(c)
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let objective_cost = costs(&objective)?;
        let budget_cost = match &budget_matrix {
            Some(b) => costs(b)?,
            None => vec![vec![T::zero(); objective.columns.len()]; objective.layers()],
        };
        Ok(Self {
            objective,
            budget_matrix,
            budget,
            objective_cost,
            budget_cost,
        })
    }

    /// Picks the objective and budget matrices named by `constraints`.
    pub fn from_constraints(
        matrices: &BTreeMap<Metric, CostMatrix<T>>,
        constraints: &SearchConstraints<T>,
    ) -> Result<Self> {
        let objective = matrices
            .get(&constraints.objective)
            .cloned()
            .ok_or(Error::MissingMatrix {
                metric: constraints.objective,
            })?;
        let budget = match (matrices.get(&constraints.budget_metric), constraints.budget) {
            (Some(m), _) => Some(m.clone()),
            (None, Budget::Unbounded) => None,
            (None, _) => {
                return Err(Error::MissingMatrix {
                    metric: constraints.budget_metric,
                })
            }
        };
        Self::new(objective, budget, constraints.budget)
    }

    pub fn layers(&self) -> usize {
        self.objective.layers()
    }

    pub fn columns(&self) -> &[ActivationKind] {
        &self.objective.columns
    }

    pub fn budget(&self) -> Budget<T> {
        self.budget
    }

    pub fn objective_matrix(&self) -> &CostMatrix<T> {
        &self.objective
    }

    pub fn budget_matrix(&self) -> Option<&CostMatrix<T>> {
        self.budget_matrix.as_ref()
    }

    pub(crate) fn objective_costs(&self) -> &[Vec<T>] {
        &self.objective_cost
    }

    pub(crate) fn budget_costs(&self) -> &[Vec<T>] {
        &self.budget_cost
    }

    fn column_indices(&self, assignment: &[ActivationKind]) -> Result<Vec<usize>> {
        if assignment.len() != self.layers() {
            return Err(Error::AssignmentLength {
                expected: self.layers(),
                got: assignment.len(),
            });
        }
        assignment
            .iter()
            .map(|&k| self.objective.column_index(k).ok_or(Error::UnknownColumn(k)))
            .collect()
    }

    /// Costs summed in layer order: `(objective, budget)`.
    pub(crate) fn costs_of_columns(&self, cols: &[usize]) -> (T, T) {
        let mut obj = T::zero();
        let mut bud = T::zero();
        for (l, &c) in cols.iter().enumerate() {
            obj = obj + self.objective_cost[l][c];
            bud = bud + self.budget_cost[l][c];
        }
        (obj, bud)
    }

    /// Finite costs within the budget.
    pub(crate) fn admits(&self, obj: T, bud: T) -> bool {
        obj.is_finite() && bud.is_finite() && self.budget.allows(bud)
    }

    pub fn is_feasible(&self, assignment: &[ActivationKind]) -> Result<bool> {
        let cols = self.column_indices(assignment)?;
        let (obj, bud) = self.costs_of_columns(&cols);
        Ok(self.admits(obj, bud))
    }

    /// Evaluates an arbitrary assignment (rank 1).
    pub fn evaluate(&self, assignment: &[ActivationKind]) -> Result<Proposal<T>> {
        let cols = self.column_indices(assignment)?;
        Ok(self.proposal_from_columns(&cols, 1))
    }

    pub(crate) fn proposal_from_columns(&self, cols: &[usize], rank: usize) -> Proposal<T> {
        let assignment: Vec<ActivationKind> = cols.iter().map(|&c| self.objective.columns[c]).collect();
        let (objective_cost, budget_cost) = self.costs_of_columns(cols);
        let total = |m: &CostMatrix<T>| {
            let mut sum = T::zero();
            for (l, &c) in cols.iter().enumerate() {
                sum = sum + m.values[l][c];
            }
            m.reference_total + sum
        };
        Proposal {
            rank,
            objective_total: total(&self.objective),
            budget_total: self.budget_matrix.as_ref().map(total),
            objective_cost,
            budget_cost: self.budget_matrix.as_ref().map(|_| budget_cost),
            assignment,
        }
    }
}

/// Number of slots where two assignments differ.
pub fn hamming_distance(a: &[ActivationKind], b: &[ActivationKind]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind::*;

    fn problem(budget: Budget<f64>) -> SearchProblem<f64> {
        let lat = CostMatrix::from_values(Metric::Latency, 10.0, vec![vec![-2.0, 0.0, -1.0, -1.5, -1.2]; 2]).unwrap();
        let acc = CostMatrix::from_values(Metric::Accuracy, 5.0, vec![vec![-0.4, 0.0, -0.1, -0.3, -0.2]; 2]).unwrap();
        SearchProblem::new(lat, Some(acc), budget).unwrap()
    }

    #[test]
    fn evaluation_uses_signed_costs() {
        let p = problem(Budget::AtMost(0.5));
        let prop = p.evaluate(&[Relu, Silu]).unwrap();
        assert_eq!(prop.objective_total, 8.0);
        assert_eq!(prop.objective_cost, -2.0);
        assert_eq!(prop.budget_total, Some(4.6));
        assert_eq!(prop.budget_cost, Some(0.4));
        assert!(p.is_feasible(&[Relu, Silu]).unwrap());
        assert!(!p.is_feasible(&[Relu, Relu]).unwrap());
    }

    #[test]
    fn constraints_need_distinct_metrics() {
        assert!(SearchConstraints::<f64>::new(Metric::Latency, Metric::Latency, Budget::Unbounded).is_err());
        let lat = CostMatrix::from_values(Metric::Latency, 1.0, vec![vec![0.0; 5]]).unwrap();
        assert!(SearchProblem::new(lat.clone(), Some(lat.clone()), Budget::Unbounded).is_err());
        assert!(SearchProblem::new(lat, None, Budget::AtMost(1.0)).is_err());
    }

    #[test]
    fn missing_matrices_are_named() {
        let c = SearchConstraints::new(Metric::Latency, Metric::Accuracy, Budget::AtMost(1.0)).unwrap();
        let err = SearchProblem::<f64>::from_constraints(&BTreeMap::new(), &c).unwrap_err();
        assert!(matches!(err, Error::MissingMatrix { metric: Metric::Latency }));
    }

    #[test]
    fn positive_infinite_accuracy_delta_is_rejected() {
        let acc = CostMatrix::from_values(Metric::Accuracy, 1.0, vec![vec![f64::INFINITY, 0.0, 0.0, 0.0, 0.0]]).unwrap();
        assert!(SearchProblem::new(acc, None, Budget::Unbounded).is_err());
    }

    #[test]
    fn budget_json_shape() {
        let c = SearchConstraints::new(Metric::Latency, Metric::Accuracy, Budget::AtMost(0.25f64)).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["budget"]["at_most"], 0.25);
        assert_eq!(v["objective"], "latency");
        let u = serde_json::to_value(Budget::<f64>::Unbounded).unwrap();
        assert_eq!(u, "unbounded");
    }
}
