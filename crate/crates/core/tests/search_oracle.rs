use actnas_core::search::{exact_search, hamming_distance, random_search};
use actnas_core::{ActivationKind, Budget, CostMatrix, Metric, SearchProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    latency: Vec<Vec<f64>>,
    accuracy: Vec<Vec<f64>>,
}

fn instance(rng: &mut ChaCha8Rng, layers: usize) -> Instance {
    let mut grid = |lo: f64, hi: f64| -> Vec<Vec<f64>> {
        (0..layers)
            .map(|_| {
                let mut row: Vec<f64> = (0..5).map(|_| rng.random_range(lo..hi)).collect();
                row[1] = 0.0; // silu reference column
                row
            })
            .collect()
    };
    Instance {
        latency: grid(-4.0, 1.0),
        accuracy: grid(-1.0, 0.3),
    }
}

/// Every assignment as column indices, lexicographic order.
fn all_assignments(layers: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..5usize.pow(layers as u32)).map(move |mut code| {
        let mut cols = vec![0; layers];
        for l in (0..layers).rev() {
            cols[l] = code % 5;
            code /= 5;
        }
        cols
    })
}

/// Brute-force minimum latency cost subject to accuracy loss ≤ budget,
/// summed in layer order. Returns (cost, assignment) with lexicographic ties.
fn brute_force(inst: &Instance, budget: f64) -> Option<(f64, Vec<usize>)> {
    let layers = inst.latency.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for cols in all_assignments(layers) {
        let mut obj = 0.0;
        let mut loss = 0.0;
        for (l, &c) in cols.iter().enumerate() {
            obj += inst.latency[l][c];
            loss += -inst.accuracy[l][c];
        }
        if loss <= budget && best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, cols));
        }
    }
    best
}

fn problem(inst: &Instance, budget: f64) -> SearchProblem<f64> {
    SearchProblem::new(
        CostMatrix::from_values(Metric::Latency, 30.0, inst.latency.clone()).unwrap(),
        Some(CostMatrix::from_values(Metric::Accuracy, 5.0, inst.accuracy.clone()).unwrap()),
        Budget::AtMost(budget),
    )
    .unwrap()
}

fn random_budget(rng: &mut ChaCha8Rng, inst: &Instance) -> f64 {
    // between the smallest achievable loss and the loss of the latency argmin
    let min_loss: f64 = inst.accuracy.iter().map(|r| r.iter().map(|v| -v).fold(f64::INFINITY, f64::min)).sum();
    let argmin_loss: f64 = inst
        .latency
        .iter()
        .zip(&inst.accuracy)
        .map(|(lat, acc)| {
            let c = (0..5).min_by(|&a, &b| lat[a].partial_cmp(&lat[b]).unwrap()).unwrap();
            -acc[c]
        })
        .sum();
    min_loss + rng.random_range(0.0..=1.0) * (argmin_loss - min_loss).max(0.0)
}

#[test]
fn rank_one_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..100 {
        let layers = 1 + i % 8;
        let inst = instance(&mut rng, layers);
        let budget = random_budget(&mut rng, &inst);
        let (want_cost, want_cols) = brute_force(&inst, budget).expect("budget chosen feasible");
        let got = exact_search(&problem(&inst, budget), 1, 0).unwrap();
        let best = &got.proposals[0];
        assert_eq!(best.objective_cost, want_cost, "instance {i}");
        let want: Vec<ActivationKind> = want_cols.iter().map(|&c| ActivationKind::ALL[c]).collect();
        assert_eq!(best.assignment, want, "instance {i}");
    }
}

#[test]
fn top_k_respects_budget_diversity_and_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..50 {
        let layers = 4 + i % 5;
        let inst = instance(&mut rng, layers);
        let budget = random_budget(&mut rng, &inst) + 0.5;
        let p = problem(&inst, budget);
        let out = exact_search(&p, 3, 3).unwrap();
        for (r, prop) in out.proposals.iter().enumerate() {
            assert_eq!(prop.rank, r + 1);
            assert!(prop.budget_cost.unwrap() <= budget);
            assert!(p.is_feasible(&prop.assignment).unwrap());
        }
        for w in out.proposals.windows(2) {
            assert!(w[0].objective_cost <= w[1].objective_cost);
        }
        for a in 0..out.proposals.len() {
            for b in a + 1..out.proposals.len() {
                assert!(hamming_distance(&out.proposals[a].assignment, &out.proposals[b].assignment) >= 3);
            }
        }
    }
}

#[test]
fn second_proposal_is_best_among_diverse_assignments() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..20 {
        let inst = instance(&mut rng, 5);
        let budget = random_budget(&mut rng, &inst) + 0.3;
        let out = exact_search(&problem(&inst, budget), 2, 2).unwrap();
        let first: Vec<usize> = out.proposals[0].assignment.iter().map(|k| k.column()).collect();
        let mut best = f64::INFINITY;
        for cols in all_assignments(5) {
            let d = cols.iter().zip(&first).filter(|(a, b)| a != b).count();
            let obj: f64 = cols.iter().enumerate().fold(0.0, |s, (l, &c)| s + inst.latency[l][c]);
            let loss: f64 = cols.iter().enumerate().fold(0.0, |s, (l, &c)| s + -inst.accuracy[l][c]);
            if d >= 2 && loss <= budget {
                best = best.min(obj);
            }
        }
        if best.is_finite() {
            assert_eq!(out.proposals[1].objective_cost, best);
        } else {
            assert!(out.truncated);
        }
    }
}

#[test]
fn random_search_never_beats_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for i in 0..30 {
        let inst = instance(&mut rng, 3 + i % 6);
        let budget = random_budget(&mut rng, &inst) + 1.0;
        let p = problem(&inst, budget);
        let exact = exact_search(&p, 1, 0).unwrap();
        let random = random_search(&p, 300, i as u64).unwrap();
        assert!(p.is_feasible(&random.assignment).unwrap());
        assert!(exact.proposals[0].objective_cost <= random.objective_cost);
    }
}

#[test]
fn large_instance_with_binding_budget_finishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(69);
    let inst = instance(&mut rng, 69);
    let budget = random_budget(&mut rng, &inst);
    let out = exact_search(&problem(&inst, budget), 3, 3).unwrap();
    assert!(!out.proposals.is_empty());
    assert!(out.proposals[0].budget_cost.unwrap() <= budget);
}
