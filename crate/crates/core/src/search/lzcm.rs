use super::{Budget, Proposal, SearchProblem};
use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::table::{CostMatrix, Metric};

/// Local zero-cost maxima: each layer independently switches from `base` to
/// `alt` when that strictly improves its accuracy delta.
pub fn lzcm_search<T: Scalar>(
    accuracy: &CostMatrix<T>,
    base: ActivationKind,
    alt: ActivationKind,
) -> Result<Proposal<T>> {
    if accuracy.metric != Metric::Accuracy {
        return Err(Error::InvalidSearch(format!(
            "lzcm needs an accuracy matrix, got {}",
            accuracy.metric
        )));
    }
    let b = accuracy.column_index(base).ok_or(Error::UnknownColumn(base))?;
    let a = accuracy.column_index(alt).ok_or(Error::UnknownColumn(alt))?;
    let assignment: Vec<ActivationKind> = accuracy
        .values
        .iter()
        .map(|row| if row[a] > row[b] { alt } else { base })
        .collect();
    let problem = SearchProblem::new(accuracy.clone(), None, Budget::Unbounded)?;
    problem.evaluate(&assignment)
}
