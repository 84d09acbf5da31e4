//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on usage errors, 2 on data, format or
//! configuration errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{GtgError, Result};
use crate::evaluation::{
    render_table, run_protocol, synthetic_blobs, Classifier, ProtocolOptions, SplitScheme,
};
use crate::io::{
    load_distance_matrix, load_features, load_labels, write_distance_matrix, write_features,
    write_labels, write_predictions, write_report_json, CsvOptions, LabelTable,
};
use crate::par::init_thread_pool;
use crate::similarity::{
    build_similarity_graph, euclidean_distance_matrix, DissimilarityMatrix, KnnOptions,
    DEFAULT_SCALE_NEIGHBORS,
};
use crate::solver::{run_game, GameConfig};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GTG_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gtg",
    version,
    about = "Semi-supervised classification with graph transduction games"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Euclidean distance matrix from feature vectors.
    Similarity {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
    },
    /// Predict labels of the unlabeled players in a labels file.
    Transduce {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Prediction CSV: player_id,class,probability.
        #[arg(long)]
        out: PathBuf,
    },
    /// Leave-one-out evaluation over a fully labeled dataset.
    ///
    /// With exactly three players per class, each player is the query once
    /// with two exemplars per class (n runs), or twice with one exemplar per
    /// class (2n runs, one per same-class exemplar). Other class sizes use a
    /// generalized leave-one-out: one run per player, with the first
    /// `train-per-class` members of every class (excluding the query) as
    /// exemplars.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        game: GameArgs,
        /// Exemplars per class; repeat for several (default: 1 and 2).
        #[arg(long = "train-per-class")]
        train_per_class: Vec<usize>,
        /// Classifiers to run; repeat for several (default: all).
        #[arg(long, value_enum)]
        classifier: Vec<Classifier>,
        /// Seeded random choice of non-query-class exemplars.
        #[arg(long = "rep-seed")]
        rep_seed: Option<u64>,
        /// Use the generalized leave-one-out even when classes have 3 members.
        #[arg(long)]
        generalized: bool,
        /// JSON report destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate Gaussian blob features and labels.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long = "per-class", default_value_t = 3)]
        per_class: usize,
        #[arg(long, default_value_t = 8)]
        dims: usize,
        #[arg(long, default_value_t = 10.0)]
        spread: f64,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        /// Feature CSV destination.
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "labels-out")]
        labels_out: PathBuf,
        /// Also write the Euclidean distance matrix.
        #[arg(long = "distances-out")]
        distances_out: Option<PathBuf>,
        /// Leave every `unlabel-every`-th player unlabeled.
        #[arg(long = "unlabel-every")]
        unlabel_every: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Square dissimilarity matrix CSV.
    #[arg(long, required_unless_present = "features", conflicts_with = "features")]
    distances: Option<PathBuf>,
    /// Feature CSV; Euclidean distances are computed from it.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Labels CSV: player_id,class (empty class = unlabeled).
    #[arg(long)]
    labels: PathBuf,
    /// Keep the distance matrix as read instead of max-symmetrizing it.
    #[arg(long = "no-symmetrize")]
    no_symmetrize: bool,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
}

#[derive(Debug, Args)]
struct GameArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    /// Add reverse kNN edges.
    #[arg(long = "symmetric-knn")]
    symmetric_knn: bool,
}

impl GameArgs {
    fn config(&self) -> GameConfig {
        GameConfig {
            k: self.k,
            epsilon: self.eps,
            max_iters: self.max_iter,
            ..GameConfig::default()
        }
    }
}

fn csv_options(delimiter: char) -> Result<CsvOptions> {
    u8::try_from(delimiter)
        .ok()
        .filter(u8::is_ascii)
        .map(|delimiter| CsvOptions { delimiter })
        .ok_or_else(|| GtgError::Config(format!("delimiter {delimiter:?} is not ASCII")))
}

fn load_input(input: &InputArgs) -> Result<(DissimilarityMatrix, LabelTable)> {
    let opts = csv_options(input.delimiter)?;
    let d = match (&input.distances, &input.features) {
        (Some(path), _) => load_distance_matrix(path, opts, !input.no_symmetrize)?,
        (None, Some(path)) => euclidean_distance_matrix(&load_features(path, opts)?),
        (None, None) => unreachable!("clap requires one input source"),
    };
    let table = load_labels(&input.labels, opts)?;
    if table.len() != d.len() {
        return Err(GtgError::Input(format!(
            "{} has {} players but the matrix has {}",
            input.labels.display(),
            table.len(),
            d.len()
        )));
    }
    Ok((d, table))
}

fn transduce(input: &InputArgs, game: &GameArgs, out: &Path) -> Result<()> {
    let (d, table) = load_input(input)?;
    let assignment = table.assignment()?;
    let config = game.config();
    config.validate()?;
    let knn = KnnOptions {
        k: config.k,
        scale_neighbors: DEFAULT_SCALE_NEIGHBORS,
        symmetric: game.symmetric_knn,
        execution: config.execution,
    };
    let graph = build_similarity_graph(&d, &knn)?;
    let result = run_game(&graph, &assignment, &config)?;
    write_predictions(out, &result, &table, csv_options(input.delimiter)?)?;
    eprintln!(
        "{} predictions, {} iterations, {}",
        result.predictions.len(),
        result.iterations,
        if result.converged { "converged" } else { "iteration limit reached" }
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    input: &InputArgs,
    game: &GameArgs,
    train_per_class: &[usize],
    classifiers: &[Classifier],
    rep_seed: Option<u64>,
    generalized: bool,
    out: Option<&Path>,
) -> Result<()> {
    let (d, table) = load_input(input)?;
    let labels = table.complete_labels()?;
    let opts = ProtocolOptions {
        game: game.config(),
        symmetric_knn: game.symmetric_knn,
        rep_seed,
        scheme: generalized.then_some(SplitScheme::Generalized),
        ..ProtocolOptions::default()
    };
    let sizes = if train_per_class.is_empty() { vec![1, 2] } else { train_per_class.to_vec() };
    let classifiers = if classifiers.is_empty() { Classifier::ALL.to_vec() } else { classifiers.to_vec() };

    let mut reports = Vec::new();
    for &t in &sizes {
        for &c in &classifiers {
            reports.push(run_protocol(&d, &labels, t, c, &opts)?);
        }
    }
    if let Some(r) = reports.first() {
        let scheme = match r.scheme {
            SplitScheme::Fixed => "fixed (3 per class)",
            SplitScheme::Generalized => "generalized leave-one-out",
        };
        println!(
            "{} players, {} classes, protocol: {scheme}",
            labels.len(),
            table.class_names.len()
        );
    }
    print!("{}", render_table(&reports));
    for r in &reports {
        for f in &r.failures {
            eprintln!("{} train/class={}: query {} failed: {}", r.classifier, r.train_per_class, table.ids[f.query], f.message);
        }
    }
    if let Some(path) = out {
        write_report_json(path, &reports)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Similarity { features, out, delimiter } => {
            let opts = csv_options(delimiter)?;
            let d = euclidean_distance_matrix(&load_features(&features, opts)?);
            write_distance_matrix(&out, &d, opts)
        }
        Command::Transduce { input, game, out } => transduce(&input, &game, &out),
        Command::Evaluate {
            input,
            game,
            train_per_class,
            classifier,
            rep_seed,
            generalized,
            out,
        } => evaluate(&input, &game, &train_per_class, &classifier, rep_seed, generalized, out.as_deref()),
        Command::Synth {
            seed,
            classes,
            per_class,
            dims,
            spread,
            noise,
            out,
            labels_out,
            distances_out,
            unlabel_every,
        } => {
            let (features, labels) = synthetic_blobs(seed, classes, per_class, dims, spread, noise)?;
            let opts = CsvOptions::default();
            write_features(&out, &features, opts)?;
            if let Some(path) = distances_out {
                write_distance_matrix(&path, &euclidean_distance_matrix(&features), opts)?;
            }
            let table = LabelTable {
                ids: (0..labels.len()).map(|i| format!("p{i}")).collect(),
                class_names: (0..classes).map(|c| format!("c{c}")).collect(),
                labels: labels
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| match unlabel_every {
                        Some(every) if every > 0 && i % every == every - 1 => None,
                        _ => Some(c),
                    })
                    .collect(),
            };
            write_labels(&labels_out, &table, opts)
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    if let Ok(threads) = std::env::var(THREADS_ENV) {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                init_thread_pool(n);
            }
            _ => log::warn!("ignoring {THREADS_ENV}={threads:?}"),
        }
    }
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
