//! The transduction game: strategy space, payoffs and replicator dynamics.
//!
//! Players are objects, pure strategies are class labels. Labeled players
//! hold one-hot strategies that never change; unlabeled players start at
//! the barycenter of the simplex and are updated synchronously with
//!
//! ```text
//! x_i(h) <- x_i(h) * u_i(h) / u_i(x)
//! u_i(h) = sum_{j in N_i} w(i, j) * x_j(h)
//! ```
//!
//! where a labeled neighbor contributes its weight only to its own class.
//! Classes are 0-based throughout the library.

use serde::{Deserialize, Serialize};

use crate::error::{GtgError, Result};
use crate::par::Execution;
use crate::similarity::SimilarityGraph;

/// Partition of players into labeled (with a class) and unlabeled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAssignment {
    classes: usize,
    labels: Vec<Option<usize>>,
}

impl LabelAssignment {
    /// Every class in `0..classes` must have at least one labeled player.
    pub fn new(classes: usize, labels: Vec<Option<usize>>) -> Result<Self> {
        if classes < 1 {
            return Err(GtgError::config("at least one class is required"));
        }
        let mut seen = vec![false; classes];
        for (i, label) in labels.iter().enumerate() {
            if let Some(c) = *label {
                if c >= classes {
                    return Err(GtgError::input(format!(
                        "player {i} has class {c} outside 0..{classes}"
                    )));
                }
                seen[c] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(GtgError::config(format!(
                "class {missing} has no labeled player"
            )));
        }
        Ok(LabelAssignment { classes, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn labeled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.labels[i].is_some())
    }

    pub fn unlabeled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.labels[i].is_none())
    }
}

/// Row-stochastic `n x m` matrix of mixed strategies.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategySpace {
    classes: usize,
    values: Vec<f64>,
}

impl StrategySpace {
    /// Rows must be nonnegative and sum to one within `1e-9`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let classes = rows.first().map_or(0, Vec::len);
        if classes == 0 {
            return Err(GtgError::input("strategy space needs at least one row and column"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != classes {
                return Err(GtgError::input(format!("row {i} has {} entries, expected {classes}", row.len())));
            }
            if row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(GtgError::input(format!("row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(GtgError::input(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(StrategySpace {
            classes,
            values: rows.into_iter().flatten().collect(),
        })
    }

    pub fn players(&self) -> usize {
        self.values.len() / self.classes
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.classes..(i + 1) * self.classes]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Euclidean (Frobenius) distance to `other`.
    pub fn distance(&self, other: &StrategySpace) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub k: usize,
    /// Stop once `||x(t+1) - x(t)||_2 <= epsilon`.
    pub epsilon: f64,
    pub max_iters: usize,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            k: 2,
            epsilon: 1e-6,
            max_iters: 100,
            execution: Execution::default(),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(GtgError::config("k must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(GtgError::config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters < 1 {
            return Err(GtgError::config("max_iters must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub player: usize,
    pub class: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GameResult {
    pub final_space: StrategySpace,
    /// One entry per unlabeled player, ascending player order.
    pub predictions: Vec<Prediction>,
    pub iterations: usize,
    pub converged: bool,
    /// `||x(t+1) - x(t)||_2` for every step taken.
    pub residuals: Vec<f64>,
}

/// One-hot rows for labeled players, uniform rows for the rest.
pub fn init_strategy_space(assignment: &LabelAssignment) -> StrategySpace {
    let m = assignment.classes();
    let uniform = 1.0 / m as f64;
    let mut values = Vec::with_capacity(assignment.len() * m);
    for label in assignment.labels() {
        match *label {
            Some(c) => values.extend((0..m).map(|h| if h == c { 1.0 } else { 0.0 })),
            None => values.extend(std::iter::repeat_n(uniform, m)),
        }
    }
    StrategySpace { classes: m, values }
}

fn accumulate_payoffs(
    i: usize,
    space: &StrategySpace,
    graph: &SimilarityGraph,
    assignment: &LabelAssignment,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for nb in graph.neighbors(i) {
        match assignment.label(nb.index) {
            Some(c) => out[c] += nb.weight,
            None => {
                for (u, &x) in out.iter_mut().zip(space.row(nb.index)) {
                    *u += nb.weight * x;
                }
            }
        }
    }
}

/// Payoff `u_i(h)` of every pure strategy `h` for player `i`.
pub fn payoff_vector(
    i: usize,
    space: &StrategySpace,
    graph: &SimilarityGraph,
    assignment: &LabelAssignment,
) -> Vec<f64> {
    let mut out = vec![0.0; space.classes()];
    accumulate_payoffs(i, space, graph, assignment, &mut out);
    out
}

/// Payoff of player `i`'s current mixed strategy, `x_i . u_i`.
pub fn expected_payoff(
    i: usize,
    space: &StrategySpace,
    graph: &SimilarityGraph,
    assignment: &LabelAssignment,
) -> f64 {
    dot(space.row(i), &payoff_vector(i, space, graph, assignment))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn replicator_step(
    space: &StrategySpace,
    graph: &SimilarityGraph,
    assignment: &LabelAssignment,
) -> StrategySpace {
    replicator_step_with(space, graph, assignment, Execution::default())
}

/// One synchronous replicator update. Labeled rows and rows with zero
/// expected payoff are copied unchanged.
pub fn replicator_step_with(
    space: &StrategySpace,
    graph: &SimilarityGraph,
    assignment: &LabelAssignment,
    execution: Execution,
) -> StrategySpace {
    let m = space.classes();
    let mut values = space.values.clone();
    execution.for_each_chunk(&mut values, m, |i, row| {
        if assignment.label(i).is_some() {
            return;
        }
        let mut payoff = vec![0.0; m];
        accumulate_payoffs(i, space, graph, assignment, &mut payoff);
        let expected = dot(row, &payoff);
        if expected > 0.0 {
            for (x, u) in row.iter_mut().zip(&payoff) {
                *x = *x * u / expected;
            }
        }
    });
    StrategySpace { classes: m, values }
}

/// Per-row argmax, lowest class on ties.
pub fn extract_labels(space: &StrategySpace) -> Vec<usize> {
    (0..space.players()).map(|i| argmax(space.row(i))).collect()
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (h, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = h;
        }
    }
    best
}

/// Plays the game from the standard initialisation until the step residual
/// drops to `config.epsilon` or `config.max_iters` steps have run.
pub fn run_game(
    graph: &SimilarityGraph,
    assignment: &LabelAssignment,
    config: &GameConfig,
) -> Result<GameResult> {
    config.validate()?;
    if graph.len() != assignment.len() {
        return Err(GtgError::input(format!(
            "graph has {} players but the labeling has {}",
            graph.len(),
            assignment.len()
        )));
    }
    if assignment.unlabeled().next().is_none() {
        return Err(GtgError::config("no unlabeled players to predict"));
    }

    let mut space = init_strategy_space(assignment);
    let mut residuals = Vec::new();
    let mut converged = false;
    while residuals.len() < config.max_iters {
        let next = replicator_step_with(&space, graph, assignment, config.execution);
        let residual = next.distance(&space);
        residuals.push(residual);
        space = next;
        if residual <= config.epsilon {
            converged = true;
            break;
        }
    }

    let predictions = assignment
        .unlabeled()
        .map(|player| Prediction {
            player,
            class: argmax(space.row(player)),
        })
        .collect();
    Ok(GameResult {
        final_space: space,
        predictions,
        iterations: residuals.len(),
        converged,
        residuals,
    })
}
