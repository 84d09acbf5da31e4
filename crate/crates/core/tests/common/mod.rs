//! Test-only reference implementations, kept independent of the library's
//! solver code paths.
#![allow(dead_code, clippy::needless_range_loop)]

use gtg::similarity::SimilarityGraph;
use gtg::solver::{LabelAssignment, StrategySpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense `m x m` partial payoff matrix `w * I`.
fn partial_payoff(m: usize, w: f64) -> Vec<Vec<f64>> {
    (0..m)
        .map(|a| (0..m).map(|b| if a == b { w } else { 0.0 }).collect())
        .collect()
}

/// Brute-force replicator step: builds every partial payoff matrix
/// explicitly, evaluates the strategy payoffs with the unlabeled-neighbor
/// matrix-vector term and the class-grouped labeled-neighbor term, the
/// expected payoff with the corresponding quadratic forms, and applies
/// the multiplicative update.
pub fn brute_force_step(
    rows: &[Vec<f64>],
    neighbors: &[Vec<(usize, f64)>],
    labels: &[Option<usize>],
) -> Vec<Vec<f64>> {
    let n = rows.len();
    let m = rows[0].len();
    let mut out = rows.to_vec();
    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        let mut payoff = vec![0.0; m];
        let mut expected = 0.0;
        for &(j, w) in &neighbors[i] {
            let a = partial_payoff(m, w);
            match labels[j] {
                None => {
                    for h in 0..m {
                        for g in 0..m {
                            payoff[h] += a[h][g] * rows[j][g];
                        }
                    }
                    for h in 0..m {
                        for g in 0..m {
                            expected += rows[i][h] * a[h][g] * rows[j][g];
                        }
                    }
                }
                Some(class) => {
                    for h in 0..m {
                        for gamma in 0..m {
                            if gamma == class {
                                payoff[h] += a[h][gamma];
                            }
                        }
                    }
                    for h in 0..m {
                        expected += rows[i][h] * a[h][class];
                    }
                }
            }
        }
        if expected > 0.0 {
            for h in 0..m {
                out[i][h] = rows[i][h] * payoff[h] / expected;
            }
        }
    }
    out
}

/// A random game instance with explicit neighbor lists.
#[derive(Clone, Debug)]
pub struct RandomGame {
    pub neighbors: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<Option<usize>>,
    pub classes: usize,
}

impl RandomGame {
    pub fn graph(&self) -> SimilarityGraph {
        SimilarityGraph::from_neighbor_lists(self.neighbors.clone()).unwrap()
    }

    pub fn assignment(&self) -> LabelAssignment {
        LabelAssignment::new(self.classes, self.labels.clone()).unwrap()
    }
}

/// `n` players, `classes` classes, every class labeled at least once, each
/// player with up to `max_degree` random neighbors of weight in (0, 1].
pub fn random_game(rng: &mut ChaCha8Rng, n: usize, classes: usize, max_degree: usize) -> RandomGame {
    assert!(n > classes);
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(rng, &mut order);
    for (c, &p) in order.iter().take(classes).enumerate() {
        labels[p] = Some(c);
    }
    for &p in &order[classes..] {
        if rng.random_bool(0.3) {
            labels[p] = Some(rng.random_range(0..classes));
        }
    }
    let neighbors = (0..n)
        .map(|i| {
            let degree = rng.random_range(0..=max_degree.min(n - 1));
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            shuffle(rng, &mut others);
            others
                .into_iter()
                .take(degree)
                .map(|j| (j, 1.0 - rng.random::<f64>()))
                .collect()
        })
        .collect();
    RandomGame { neighbors, labels, classes }
}

/// Random interior point of the simplex for each unlabeled row, one-hot rows
/// for labeled players.
pub fn random_space(rng: &mut ChaCha8Rng, game: &RandomGame) -> Vec<Vec<f64>> {
    game.labels
        .iter()
        .map(|l| match *l {
            Some(c) => (0..game.classes).map(|h| if h == c { 1.0 } else { 0.0 }).collect(),
            None => {
                let raw: Vec<f64> = (0..game.classes).map(|_| 0.05 + rng.random::<f64>()).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / s).collect()
            }
        })
        .collect()
}

pub fn rows_of(space: &StrategySpace) -> Vec<Vec<f64>> {
    (0..space.players()).map(|i| space.row(i).to_vec()).collect()
}

fn shuffle<T>(rng: &mut ChaCha8Rng, v: &mut [T]) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Scalar replicator recursion for one unlabeled player between a class-0
/// exemplar of weight `w0` and a class-1 exemplar of weight `w1`: returns
/// the class-0 probability after each step, starting from 1/2.
pub fn two_class_recursion(w0: f64, w1: f64, steps: usize) -> Vec<f64> {
    let mut p = 0.5;
    (0..steps)
        .map(|_| {
            p = p * w0 / (p * w0 + (1.0 - p) * w1);
            p
        })
        .collect()
}

/// Exhaustive nearest-member scan; ties go to the lower player index.
pub fn scan_nn(query: &[f64], members: &[(usize, usize)]) -> usize {
    let mut best = 0;
    for k in 1..members.len() {
        let better = query[k] < query[best]
            || (query[k] == query[best] && members[k].0 < members[best].0);
        if better {
            best = k;
        }
    }
    members[best].1
}
