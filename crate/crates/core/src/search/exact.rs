//! Exact multiple-choice search: one activation per layer, minimum summed
//! objective cost, summed budget cost within the budget.
//!
//! Depth-first branch-and-bound over layers. A node is pruned when
//! - the budget cannot be met even with every remaining layer at its cheapest
//!   budget cost,
//! - the partial objective plus every remaining layer's cheapest objective
//!   cost exceeds the incumbent,
//! - a Lagrangian relaxation of the budget gives a bound above the incumbent, or
//! - some earlier proposal can no longer be escaped by `diversity` slots.
//!
//! Bounds are compared with a rounding slack so ties are always explored and
//! resolved towards the lexicographically smallest assignment.

use super::{Proposal, SearchProblem};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_TOP_K: usize = 3;
pub const DEFAULT_DIVERSITY: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutcome<T> {
    /// Sorted by objective cost, non-decreasing; ranks start at 1.
    pub proposals: Vec<Proposal<T>>,
    /// Fewer than `top_k` proposals exist under the diversity cuts.
    pub truncated: bool,
    /// Search nodes expanded across all re-solves.
    pub nodes: u64,
}

/// Finds up to `top_k` optimal proposals that pairwise differ in at least
/// `diversity` slots (at least one slot when `diversity` is 0).
pub fn exact_search<T: Scalar>(problem: &SearchProblem<T>, top_k: usize, diversity: usize) -> Result<ExactOutcome<T>> {
    if top_k == 0 {
        return Err(Error::InvalidSearch("top_k must be at least 1".into()));
    }
    if diversity > problem.layers() {
        return Err(Error::InvalidSearch(format!(
            "diversity {diversity} exceeds the {} layers",
            problem.layers()
        )));
    }
    let mut solver = Solver::new(problem, diversity.max(1));
    let mut proposals = Vec::new();
    let mut truncated = false;
    for rank in 1..=top_k {
        match solver.solve() {
            Some(cols) => {
                proposals.push(problem.proposal_from_columns(&cols, rank));
                solver.cuts.push(cols);
            }
            None if rank == 1 => return Err(Error::NoSolution),
            None => {
                truncated = true;
                break;
            }
        }
    }
    Ok(ExactOutcome {
        proposals,
        truncated,
        nodes: solver.nodes,
    })
}

struct Lagrangian<T> {
    lambda: T,
    limit: T,
    /// Σ over layers ≥ l of min_c (obj + λ·bud).
    suffix: Vec<T>,
    slack: T,
}

struct Solver<'p, T> {
    problem: &'p SearchProblem<T>,
    obj: &'p [Vec<T>],
    bud: &'p [Vec<T>],
    limit: Option<T>,
    /// Per-layer columns with finite costs, cheapest objective first.
    order: Vec<Vec<usize>>,
    suffix_obj: Vec<T>,
    suffix_bud: Vec<T>,
    lagrangian: Option<Lagrangian<T>>,
    obj_slack: T,
    bud_slack: T,
    diversity: usize,
    cuts: Vec<Vec<usize>>,
    nodes: u64,
    // per-solve state
    current: Vec<usize>,
    mismatches: Vec<usize>,
    best: Option<(T, Vec<usize>)>,
}

fn rounding_slack<T: Scalar>(layers: usize, magnitude: T) -> T {
    T::of_usize(4 * (layers + 2)) * T::epsilon() * magnitude
}

fn finite_abs_max<T: Scalar>(row: &[T]) -> T {
    row.iter()
        .filter(|v| v.is_finite())
        .fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Suffix sums of per-layer minima over finite cells; `+inf` when a layer has none.
fn suffix_minima<T: Scalar>(rows: impl DoubleEndedIterator<Item = T>, layers: usize) -> Vec<T> {
    let mut suffix = vec![T::zero(); layers + 1];
    for (i, m) in rows.rev().enumerate() {
        let l = layers - 1 - i;
        suffix[l] = suffix[l + 1] + m;
    }
    suffix
}

impl<'p, T: Scalar> Solver<'p, T> {
    fn new(problem: &'p SearchProblem<T>, diversity: usize) -> Self {
        let obj = problem.objective_costs();
        let bud = problem.budget_costs();
        let layers = obj.len();
        let usable = |l: usize, c: usize| obj[l][c].is_finite() && bud[l][c].is_finite();

        let order: Vec<Vec<usize>> = (0..layers)
            .map(|l| {
                let mut cols: Vec<usize> = (0..obj[l].len()).filter(|&c| usable(l, c)).collect();
                cols.sort_by(|&a, &b| obj[l][a].partial_cmp(&obj[l][b]).unwrap().then(a.cmp(&b)));
                cols
            })
            .collect();
        let layer_min = |costs: &'p [Vec<T>], order: &[Vec<usize>]| {
            (0..layers)
                .map(|l| {
                    order[l]
                        .iter()
                        .map(|&c| costs[l][c])
                        .fold(T::infinity(), T::min)
                })
                .collect::<Vec<T>>()
        };
        let obj_min = layer_min(obj, &order);
        let bud_min = layer_min(bud, &order);
        let suffix_obj = suffix_minima(obj_min.into_iter(), layers);
        let suffix_bud = suffix_minima(bud_min.into_iter(), layers);

        let obj_mag: T = obj.iter().map(|r| finite_abs_max(r)).sum();
        let bud_mag: T = bud.iter().map(|r| finite_abs_max(r)).sum();
        let limit = problem.budget().limit();

        let mut solver = Self {
            problem,
            obj,
            bud,
            limit,
            order,
            suffix_obj,
            suffix_bud,
            lagrangian: None,
            obj_slack: rounding_slack(layers, obj_mag),
            bud_slack: rounding_slack(layers, bud_mag + limit.filter(|v| v.is_finite()).map_or(T::zero(), T::abs)),
            diversity,
            cuts: Vec::new(),
            nodes: 0,
            current: Vec::with_capacity(layers),
            mismatches: Vec::new(),
            best: None,
        };
        solver.lagrangian = solver.fit_lagrangian(obj_mag, bud_mag);
        if let Some(lambda) = solver.lagrangian.as_ref().map(|lg| lg.lambda) {
            // branch on reduced cost so good incumbents appear early
            for l in 0..layers {
                let key = |c: usize| obj[l][c] + lambda * bud[l][c];
                solver.order[l].sort_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap().then(a.cmp(&b)));
            }
        }
        solver
    }

    fn lagrangian_suffix(&self, lambda: T) -> Vec<T> {
        let layers = self.obj.len();
        let mins = (0..layers).map(|l| {
            self.order[l]
                .iter()
                .map(|&c| self.obj[l][c] + lambda * self.bud[l][c])
                .fold(T::infinity(), T::min)
        });
        suffix_minima(mins, layers)
    }

    /// Root dual value `Σ_l min_c (obj + λ·bud) − λ·limit`.
    fn dual(&self, lambda: T, limit: T) -> T {
        self.lagrangian_suffix(lambda)[0] - lambda * limit
    }

    /// Picks the multiplier maximizing the concave root dual: a coarse
    /// geometric scan, then golden-section refinement around the best point.
    fn fit_lagrangian(&self, obj_mag: T, bud_mag: T) -> Option<Lagrangian<T>> {
        let limit = self.limit.filter(|v| v.is_finite())?;
        if !self.suffix_obj[0].is_finite() || !self.suffix_bud[0].is_finite() || bud_mag == T::zero() {
            return None;
        }
        let scale = (obj_mag.max(T::epsilon())) / bud_mag;
        let grid: Vec<T> = (-20..=20).map(|k| scale * T::of(2f64.powi(k))).collect();
        let (mut best_i, mut best_v) = (0, self.dual(grid[0], limit));
        for (i, &g) in grid.iter().enumerate().skip(1) {
            let v = self.dual(g, limit);
            if v > best_v {
                best_i = i;
                best_v = v;
            }
        }
        let mut lo = if best_i == 0 { T::zero() } else { grid[best_i - 1] };
        let mut hi = grid[(best_i + 1).min(grid.len() - 1)];
        let phi = T::of(0.618_033_988_749_894_9);
        for _ in 0..60 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if self.dual(a, limit) < self.dual(b, limit) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let mut lambda = (lo + hi) / T::of(2.0);
        if self.dual(lambda, limit) < best_v {
            lambda = grid[best_i];
        }
        if !(lambda > T::zero()) {
            return None;
        }
        let suffix = self.lagrangian_suffix(lambda);
        let layers = self.obj.len();
        let slack = rounding_slack(layers, obj_mag + lambda * (bud_mag + limit.abs()));
        Some(Lagrangian {
            lambda,
            limit,
            suffix,
            slack,
        })
    }

    fn solve(&mut self) -> Option<Vec<usize>> {
        self.best = self.warm_start();
        self.current.clear();
        self.mismatches = vec![0; self.cuts.len()];
        self.descend(0, T::zero(), T::zero());
        self.best.take().map(|(_, cols)| cols)
    }

    fn acceptable(&self, cols: &[usize]) -> Option<T> {
        let (obj, bud) = self.problem.costs_of_columns(cols);
        let diverse = self
            .cuts
            .iter()
            .all(|cut| cut.iter().zip(cols).filter(|(a, b)| a != b).count() >= self.diversity);
        (diverse && self.problem.admits(obj, bud)).then_some(obj)
    }

    /// A feasible starting incumbent, if one is easy to find: per-layer
    /// minimizers of `obj + λ·bud` over a range of multipliers, then greedy
    /// single-slot improvements.
    fn warm_start(&self) -> Option<(T, Vec<usize>)> {
        let layers = self.obj.len();
        if self.order.iter().any(Vec::is_empty) {
            return None;
        }
        let base = self.lagrangian.as_ref().map_or(T::one(), |lg| lg.lambda);
        let mut best: Option<(T, Vec<usize>)> = None;
        for k in -8..=24 {
            let lambda = if k == -8 { T::zero() } else { base * T::of(2f64.powi(k)) };
            let cols: Vec<usize> = (0..layers)
                .map(|l| {
                    let key = |c: usize| self.obj[l][c] + lambda * self.bud[l][c];
                    self.order[l]
                        .iter()
                        .copied()
                        .min_by(|&a, &b| key(a).partial_cmp(&key(b)).unwrap().then(a.cmp(&b)))
                        .unwrap_or(0)
                })
                .collect();
            if let Some(obj) = self.acceptable(&cols) {
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, cols));
                }
            }
        }
        let (mut obj, mut cols) = best?;
        let mut improved = true;
        while improved {
            improved = false;
            for l in 0..layers {
                let keep = cols[l];
                for &c in &self.order[l] {
                    if c == keep {
                        continue;
                    }
                    cols[l] = c;
                    match self.acceptable(&cols) {
                        Some(v) if v < obj => {
                            obj = v;
                            improved = true;
                            break;
                        }
                        _ => cols[l] = keep,
                    }
                }
            }
        }
        Some((obj, cols))
    }

    fn pruned(&self, layer: usize, obj: T, bud: T) -> bool {
        let remaining = self.obj.len() - layer;
        if self.mismatches.iter().any(|&m| m + remaining < self.diversity) {
            return true;
        }
        if let Some(limit) = self.limit {
            if bud + self.suffix_bud[layer] > limit + self.bud_slack {
                return true;
            }
        }
        let Some((incumbent, _)) = &self.best else {
            return false;
        };
        let incumbent = *incumbent;
        if obj + self.suffix_obj[layer] > incumbent + self.obj_slack + rounding_slack(self.obj.len(), incumbent.abs()) {
            return true;
        }
        if let Some(lg) = &self.lagrangian {
            let bound = obj + lg.lambda * (bud - lg.limit) + lg.suffix[layer];
            if bound > incumbent + lg.slack + rounding_slack(self.obj.len(), incumbent.abs()) {
                return true;
            }
        }
        false
    }

    fn descend(&mut self, layer: usize, obj: T, bud: T) {
        self.nodes += 1;
        if layer == self.obj.len() {
            self.visit_leaf(obj, bud);
            return;
        }
        if self.pruned(layer, obj, bud) {
            return;
        }
        for i in 0..self.order[layer].len() {
            let c = self.order[layer][i];
            self.current.push(c);
            for (m, cut) in self.mismatches.iter_mut().zip(&self.cuts) {
                *m += usize::from(cut[layer] != c);
            }
            self.descend(layer + 1, obj + self.obj[layer][c], bud + self.bud[layer][c]);
            for (m, cut) in self.mismatches.iter_mut().zip(&self.cuts) {
                *m -= usize::from(cut[layer] != c);
            }
            self.current.pop();
        }
    }

    fn visit_leaf(&mut self, obj: T, bud: T) {
        if !self.problem.admits(obj, bud) {
            return;
        }
        if self.mismatches.iter().any(|&m| m < self.diversity) {
            return;
        }
        let better = match &self.best {
            None => true,
            Some((b, cols)) => obj < *b || (obj == *b && self.current < *cols),
        };
        if better {
            self.best = Some((obj, self.current.clone()));
        }
    }
}
