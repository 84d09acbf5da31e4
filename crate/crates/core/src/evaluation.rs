//! Leave-one-out evaluation protocol and synthetic datasets.
//!
//! Each run takes one player as the sole unlabeled query and a per-class
//! sample of the remaining players as the labeled training set. On datasets
//! with exactly three players per class this gives one run per player with
//! two exemplars per class, or two runs per player (one per choice of the
//! same-class exemplar) with a single exemplar per class.

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::{accumulated_nn_classify, nn_classify, TrainingMember, TrainingSet};
use crate::error::{GtgError, Result};
use crate::par::Execution;
use crate::similarity::{build_similarity_graph, DissimilarityMatrix, FeatureMatrix, KnnOptions, DEFAULT_SCALE_NEIGHBORS};
use crate::solver::{run_game, GameConfig, LabelAssignment};

/// Class size the fixed protocol expects.
pub const PROTOCOL_CLASS_SIZE: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolSplit {
    pub query: usize,
    pub training: TrainingSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Classifier {
    Gtg,
    Nn,
    AccNn,
}

impl Classifier {
    pub const ALL: [Classifier; 3] = [Classifier::Gtg, Classifier::Nn, Classifier::AccNn];

    pub fn name(self) -> &'static str {
        match self {
            Classifier::Gtg => "gtg",
            Classifier::Nn => "nn",
            Classifier::AccNn => "acc-nn",
        }
    }
}

impl fmt::Display for Classifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitScheme {
    /// Exactly three players per class, `train_per_class` in {1, 2}.
    Fixed,
    /// Every player is the query once; other classes contribute a fixed-size
    /// sample. Works for any class sizes large enough for the sample.
    Generalized,
}

fn class_members(labels: &[usize]) -> Result<Vec<Vec<usize>>> {
    let classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut members = vec![Vec::new(); classes];
    for (player, &c) in labels.iter().enumerate() {
        members[c].push(player);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(GtgError::Protocol(format!("class {empty} has no members")));
    }
    Ok(members)
}

/// Picks `count` members of `pool`: the lowest indices, or a seeded sample.
fn representatives(pool: &[usize], count: usize, rng: Option<&mut ChaCha8Rng>) -> Vec<usize> {
    match rng {
        None => pool[..count].to_vec(),
        Some(rng) => {
            let mut chosen: Vec<usize> =
                sample(rng, pool.len(), count).into_iter().map(|k| pool[k]).collect();
            chosen.sort_unstable();
            chosen
        }
    }
}

fn make_split(query: usize, chosen: Vec<(usize, usize)>, classes: usize) -> Result<ProtocolSplit> {
    let mut members: Vec<TrainingMember> = chosen
        .into_iter()
        .map(|(player, class)| TrainingMember { player, class })
        .collect();
    members.sort_unstable_by_key(|m| m.player);
    Ok(ProtocolSplit {
        query,
        training: TrainingSet::new(classes, members)?,
    })
}

/// Splits for the fixed protocol. Representatives of the non-query classes
/// are their lowest-index members unless `rep_seed` is given.
pub fn build_splits(
    labels: &[usize],
    train_per_class: usize,
    rep_seed: Option<u64>,
) -> Result<Vec<ProtocolSplit>> {
    if !(1..=2).contains(&train_per_class) {
        return Err(GtgError::Protocol(format!(
            "train_per_class must be 1 or 2, got {train_per_class}"
        )));
    }
    let members = class_members(labels)?;
    if let Some((c, m)) = members
        .iter()
        .enumerate()
        .find(|(_, m)| m.len() != PROTOCOL_CLASS_SIZE)
    {
        return Err(GtgError::Protocol(format!(
            "class {c} has {} members; the fixed protocol needs exactly {PROTOCOL_CLASS_SIZE}",
            m.len()
        )));
    }
    let classes = members.len();
    let mut rng = rep_seed.map(ChaCha8Rng::seed_from_u64);

    let mut splits = Vec::with_capacity(labels.len() * (3 - train_per_class));
    for (query, &qc) in labels.iter().enumerate() {
        let same: Vec<usize> = members[qc].iter().copied().filter(|&p| p != query).collect();
        // two exemplars: the query's class is fully determined; one exemplar:
        // enumerate both same-class choices
        let same_choices: Vec<Vec<usize>> = if train_per_class == 2 {
            vec![same]
        } else {
            same.iter().map(|&p| vec![p]).collect()
        };
        for same_rep in same_choices {
            let mut chosen: Vec<(usize, usize)> = same_rep.into_iter().map(|p| (p, qc)).collect();
            for (c, pool) in members.iter().enumerate().filter(|&(c, _)| c != qc) {
                chosen.extend(
                    representatives(pool, train_per_class, rng.as_mut())
                        .into_iter()
                        .map(|p| (p, c)),
                );
            }
            splits.push(make_split(query, chosen, classes)?);
        }
    }
    Ok(splits)
}

/// One split per player with `train_per_class` exemplars from every class.
pub fn build_generalized_splits(
    labels: &[usize],
    train_per_class: usize,
    rep_seed: Option<u64>,
) -> Result<Vec<ProtocolSplit>> {
    if train_per_class < 1 {
        return Err(GtgError::Protocol("train_per_class must be at least 1".into()));
    }
    let members = class_members(labels)?;
    let classes = members.len();
    let mut rng = rep_seed.map(ChaCha8Rng::seed_from_u64);
    let mut splits = Vec::with_capacity(labels.len());
    for (query, &qc) in labels.iter().enumerate() {
        let mut chosen = Vec::with_capacity(classes * train_per_class);
        for (c, pool) in members.iter().enumerate() {
            let pool: Vec<usize> = pool.iter().copied().filter(|&p| p != query).collect();
            if pool.len() < train_per_class {
                return Err(GtgError::Protocol(format!(
                    "class {c} has {} candidates for query {query}, need {train_per_class}",
                    pool.len()
                )));
            }
            let reps = if c == qc {
                representatives(&pool, train_per_class, None)
            } else {
                representatives(&pool, train_per_class, rng.as_mut())
            };
            chosen.extend(reps.into_iter().map(|p| (p, c)));
        }
        splits.push(make_split(query, chosen, classes)?);
    }
    Ok(splits)
}

/// True when every class has exactly [`PROTOCOL_CLASS_SIZE`] members.
pub fn fits_fixed_protocol(labels: &[usize]) -> bool {
    class_members(labels).is_ok_and(|m| m.iter().all(|c| c.len() == PROTOCOL_CLASS_SIZE))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolOptions {
    pub game: GameConfig,
    pub scale_neighbors: usize,
    pub symmetric_knn: bool,
    pub rep_seed: Option<u64>,
    /// `None` picks [`SplitScheme::Fixed`] when the dataset fits it.
    pub scheme: Option<SplitScheme>,
    /// Parallelism across splits; each split runs sequentially.
    pub execution: Execution,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            game: GameConfig::default(),
            scale_neighbors: DEFAULT_SCALE_NEIGHBORS,
            symmetric_knn: false,
            rep_seed: None,
            scheme: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub query: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub classifier: Classifier,
    pub train_per_class: usize,
    pub scheme: SplitScheme,
    pub runs: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// `confusion[true][predicted]`; failed runs are not counted here.
    pub confusion: Vec<Vec<usize>>,
    pub failures: Vec<RunFailure>,
}

impl AccuracyReport {
    pub fn summary(&self) -> String {
        format!(
            "{:<7} train/class={} {:>4} / {:<4} {:6.2}%",
            self.classifier.name(),
            self.train_per_class,
            self.correct,
            self.runs,
            100.0 * self.accuracy
        )
    }
}

/// Classifies the query of one split.
pub fn classify_split(
    d: &DissimilarityMatrix,
    split: &ProtocolSplit,
    classifier: Classifier,
    opts: &ProtocolOptions,
) -> Result<usize> {
    let members = split.training.members();
    match classifier {
        Classifier::Nn | Classifier::AccNn => {
            let query: Vec<f64> = members.iter().map(|m| d.get(split.query, m.player)).collect();
            if classifier == Classifier::Nn {
                nn_classify(&query, &split.training)
            } else {
                accumulated_nn_classify(&query, &split.training)
            }
        }
        Classifier::Gtg => {
            let mut players: Vec<(usize, Option<usize>)> =
                members.iter().map(|m| (m.player, Some(m.class))).collect();
            players.push((split.query, None));
            players.sort_unstable_by_key(|&(p, _)| p);
            let order: Vec<usize> = players.iter().map(|&(p, _)| p).collect();
            let sub = d.submatrix(&order);
            let knn = KnnOptions {
                k: opts.game.k,
                scale_neighbors: opts.scale_neighbors,
                symmetric: opts.symmetric_knn,
                execution: Execution::Sequential,
            };
            let graph = build_similarity_graph(&sub, &knn)?;
            let assignment =
                LabelAssignment::new(split.training.classes(), players.iter().map(|&(_, l)| l).collect())?;
            let game = GameConfig {
                execution: Execution::Sequential,
                ..opts.game
            };
            let result = run_game(&graph, &assignment, &game)?;
            Ok(result.predictions[0].class)
        }
    }
}

pub fn splits_for(
    labels: &[usize],
    train_per_class: usize,
    opts: &ProtocolOptions,
) -> Result<(SplitScheme, Vec<ProtocolSplit>)> {
    let scheme = opts.scheme.unwrap_or(if fits_fixed_protocol(labels) {
        SplitScheme::Fixed
    } else {
        SplitScheme::Generalized
    });
    let splits = match scheme {
        SplitScheme::Fixed => build_splits(labels, train_per_class, opts.rep_seed)?,
        SplitScheme::Generalized => build_generalized_splits(labels, train_per_class, opts.rep_seed)?,
    };
    Ok((scheme, splits))
}

/// Runs every split with `classifier` and tallies the outcome. A failing
/// split is counted as a run and recorded in `failures`.
pub fn run_protocol(
    d: &DissimilarityMatrix,
    labels: &[usize],
    train_per_class: usize,
    classifier: Classifier,
    opts: &ProtocolOptions,
) -> Result<AccuracyReport> {
    if d.len() != labels.len() {
        return Err(GtgError::input(format!(
            "{} labels for a {}x{} dissimilarity matrix",
            labels.len(),
            d.len(),
            d.len()
        )));
    }
    if classifier == Classifier::Gtg {
        opts.game.validate()?;
    }
    let (scheme, splits) = splits_for(labels, train_per_class, opts)?;
    let outcomes = opts
        .execution
        .map_indexed(splits.len(), |s| classify_split(d, &splits[s], classifier, opts));

    let classes = labels.iter().max().map_or(0, |&c| c + 1);
    let mut confusion = vec![vec![0; classes]; classes];
    let mut correct = 0;
    let mut failures = Vec::new();
    for (split, outcome) in splits.iter().zip(outcomes) {
        let truth = labels[split.query];
        match outcome {
            Ok(pred) => {
                confusion[truth][pred] += 1;
                correct += usize::from(pred == truth);
            }
            Err(e) => failures.push(RunFailure {
                query: split.query,
                message: e.to_string(),
            }),
        }
    }
    let runs = splits.len();
    Ok(AccuracyReport {
        classifier,
        train_per_class,
        scheme,
        runs,
        correct,
        accuracy: if runs == 0 { 0.0 } else { correct as f64 / runs as f64 },
        confusion,
        failures,
    })
}

/// Classifiers as rows, training-set sizes as columns.
pub fn render_table(reports: &[AccuracyReport]) -> String {
    let mut sizes: Vec<usize> = reports.iter().map(|r| r.train_per_class).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut rows: Vec<Classifier> = Vec::new();
    for r in reports {
        if !rows.contains(&r.classifier) {
            rows.push(r.classifier);
        }
    }
    let mut out = format!("{:<10}", "classifier");
    for t in &sizes {
        out.push_str(&format!(" | {:>24}", format!("train/class = {t}")));
    }
    out.push('\n');
    out.push_str(&"-".repeat(10 + 27 * sizes.len()));
    out.push('\n');
    for c in rows {
        out.push_str(&format!("{:<10}", c.name()));
        for t in &sizes {
            let cell = reports
                .iter()
                .find(|r| r.classifier == c && r.train_per_class == *t)
                .map_or_else(
                    || "-".to_string(),
                    |r| format!("{} / {}  {:.1}%", r.correct, r.runs, 100.0 * r.accuracy),
                );
            out.push_str(&format!(" | {cell:>24}"));
        }
        out.push('\n');
    }
    out
}

/// Isotropic Gaussian clusters. Class centers have per-coordinate standard
/// deviation `center_spread`; members add `noise` times standard normal
/// offsets. Players are ordered class by class.
pub fn synthetic_blobs(
    seed: u64,
    classes: usize,
    per_class: usize,
    dims: usize,
    center_spread: f64,
    noise: f64,
) -> Result<(FeatureMatrix, Vec<usize>)> {
    if classes < 1 || per_class < 1 || dims < 1 {
        return Err(GtgError::input("classes, per_class and dims must all be at least 1"));
    }
    if !(noise >= 0.0 && noise.is_finite() && center_spread.is_finite()) {
        return Err(GtgError::input("noise must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(classes * per_class * dims);
    let mut labels = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        let center: Vec<f64> = (0..dims)
            .map(|_| center_spread * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for _ in 0..per_class {
            values.extend(
                center
                    .iter()
                    .map(|&x| x + noise * rng.sample::<f64, _>(StandardNormal)),
            );
            labels.push(c);
        }
    }
    Ok((FeatureMatrix::new(classes * per_class, dims, values)?, labels))
}
