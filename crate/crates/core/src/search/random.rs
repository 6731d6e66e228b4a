use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Proposal, SearchProblem};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_ITERATIONS: usize = 10_000;

/// Resamples per iteration before the iteration counts as failed.
pub const REJECTION_CAP: usize = 100;

/// Uniform per-layer sampling with budget rejection, keeping the best feasible
/// sample. The first sample to reach a given objective wins ties.
pub fn random_search<T: Scalar>(problem: &SearchProblem<T>, iterations: usize, seed: u64) -> Result<Proposal<T>> {
    if iterations == 0 {
        return Err(Error::InvalidSearch("random search needs at least one iteration".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = problem.layers();
    let width = problem.columns().len();
    let mut cols = vec![0usize; layers];
    let mut best: Option<(T, Vec<usize>)> = None;

    for _ in 0..iterations {
        for _ in 0..REJECTION_CAP {
            for c in cols.iter_mut() {
                *c = rng.random_range(0..width);
            }
            let (obj, bud) = problem.costs_of_columns(&cols);
            if !problem.admits(obj, bud) {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, cols.clone()));
            }
            break;
        }
    }
    let (_, cols) = best.ok_or(Error::NoSolution)?;
    Ok(problem.proposal_from_columns(&cols, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::Budget;
    use crate::table::{CostMatrix, Metric};

    fn instance(layers: usize, seed: u64) -> (CostMatrix<f64>, CostMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gen = |lo: f64, hi: f64| -> Vec<Vec<f64>> {
            (0..layers).map(|_| (0..5).map(|_| rng.random_range(lo..hi)).collect()).collect()
        };
        let lat = gen(-3.0, 1.0);
        let acc = gen(-1.0, 0.2);
        (
            CostMatrix::from_values(Metric::Latency, 20.0, lat).unwrap(),
            CostMatrix::from_values(Metric::Accuracy, 4.0, acc).unwrap(),
        )
    }

    #[test]
    fn deterministic_per_seed() {
        let (lat, acc) = instance(6, 1);
        let p = SearchProblem::new(lat, Some(acc), Budget::AtMost(1.0)).unwrap();
        assert_eq!(random_search(&p, 500, 9).unwrap(), random_search(&p, 500, 9).unwrap());
    }

    #[test]
    fn infeasible_budget_reports_no_solution() {
        let (lat, acc) = instance(4, 2);
        let p = SearchProblem::new(lat, Some(acc), Budget::AtMost(f64::NEG_INFINITY)).unwrap();
        assert!(matches!(random_search(&p, 20, 0), Err(Error::NoSolution)));
    }

    #[test]
    fn more_iterations_never_hurt() {
        let (lat, acc) = instance(8, 3);
        let p = SearchProblem::new(lat, Some(acc), Budget::AtMost(3.0)).unwrap();
        let short = random_search(&p, 10, 4).unwrap();
        let long = random_search(&p, 1000, 4).unwrap();
        assert!(long.objective_cost <= short.objective_cost);
        assert!(p.is_feasible(&long.assignment).unwrap());
    }

    #[test]
    fn zero_iterations_is_invalid() {
        let (lat, acc) = instance(2, 5);
        let p = SearchProblem::new(lat, Some(acc), Budget::Unbounded).unwrap();
        assert!(random_search(&p, 0, 0).is_err());
    }
}
