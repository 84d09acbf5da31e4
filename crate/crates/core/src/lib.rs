//! Graph transduction games for semi-supervised classification.
//!
//! Objects are players and class labels are pure strategies. Labeled players
//! commit to their class, unlabeled players start undecided, and replicator
//! dynamics over a kNN similarity graph drive the game to an equilibrium
//! whose per-player argmax is the predicted labeling.
//!
//! ```
//! use gtg::similarity::{knn_neighborhoods, DissimilarityMatrix};
//! use gtg::solver::{run_game, GameConfig, LabelAssignment};
//!
//! let d = DissimilarityMatrix::from_rows(vec![
//!     vec![0.0, 1.0, 9.0],
//!     vec![1.0, 0.0, 8.0],
//!     vec![9.0, 8.0, 0.0],
//! ])?;
//! let graph = knn_neighborhoods(&d, 2)?;
//! let labels = LabelAssignment::new(2, vec![Some(0), None, Some(1)])?;
//! let result = run_game(&graph, &labels, &GameConfig::default())?;
//! assert_eq!(result.predictions[0].class, 0);
//! # Ok::<(), gtg::GtgError>(())
//! ```

pub mod baselines;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod par;
pub mod similarity;
pub mod solver;

pub use error::{GtgError, Result};
pub use par::Execution;
