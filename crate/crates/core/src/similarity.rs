//! Pairwise dissimilarities, local scaling and the kNN similarity graph.
//!
//! The graph stores, for every player, its neighbor list sorted by ascending
//! player index together with the similarity weight
//! `w(i, j) = exp(-d(i, j) / (sigma_i * sigma_j))`. The partial payoff matrix
//! between two players is that weight times the identity, so the weight is
//! all the solver needs.

use std::cmp::Ordering;

use crate::error::{GtgError, Result};
use crate::par::Execution;

/// Rank of the neighbor whose distance sets a player's local scale.
pub const DEFAULT_SCALE_NEIGHBORS: usize = 7;

/// Lower bound on every local scale; duplicate points would otherwise give
/// a zero scale.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Dense `rows x dims` matrix of feature vectors, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    dims: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dims: usize, values: Vec<f64>) -> Result<Self> {
        if rows < 2 {
            return Err(GtgError::input(format!(
                "feature matrix needs at least 2 rows, got {rows}"
            )));
        }
        if dims < 1 {
            return Err(GtgError::input("feature matrix needs at least 1 column"));
        }
        if values.len() != rows * dims {
            return Err(GtgError::input(format!(
                "expected {} feature values for {rows}x{dims}, got {}",
                rows * dims,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(GtgError::input(format!(
                "non-finite feature value at row {}, column {}",
                pos / dims,
                pos % dims
            )));
        }
        Ok(FeatureMatrix { rows, dims, values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let dims = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dims) {
            return Err(GtgError::input(format!(
                "ragged feature rows: row {bad} has {} values, expected {dims}",
                rows[bad].len()
            )));
        }
        FeatureMatrix::new(n, dims, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }
}

/// Square matrix of nonnegative pairwise dissimilarities with a zero
/// diagonal. Symmetry is not enforced; see [`symmetrize_max`].
#[derive(Clone, Debug, PartialEq)]
pub struct DissimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DissimilarityMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(GtgError::input(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                values.len()
            )));
        }
        for (pos, &v) in values.iter().enumerate() {
            let (i, j) = (pos / n, pos % n);
            if !v.is_finite() {
                return Err(GtgError::input(format!("non-finite dissimilarity at ({i}, {j})")));
            }
            if v < 0.0 {
                return Err(GtgError::input(format!("negative dissimilarity {v} at ({i}, {j})")));
            }
            if i == j && v != 0.0 {
                return Err(GtgError::input(format!("nonzero diagonal entry {v} at ({i}, {i})")));
            }
        }
        Ok(DissimilarityMatrix { n, values })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(GtgError::input(format!(
                "matrix is not square: {n} rows but row {bad} has {} columns",
                rows[bad].len()
            )));
        }
        DissimilarityMatrix::new(n, rows.into_iter().flatten().collect())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Restriction to `players`, in the given order.
    pub fn submatrix(&self, players: &[usize]) -> DissimilarityMatrix {
        let values = players
            .iter()
            .flat_map(|&i| players.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        DissimilarityMatrix {
            n: players.len(),
            values,
        }
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<DissimilarityMatrix> {
        DissimilarityMatrix::new(self.n, self.values.iter().map(|v| v * factor).collect())
    }
}

pub fn euclidean_distance_matrix(features: &FeatureMatrix) -> DissimilarityMatrix {
    euclidean_distance_matrix_with(features, Execution::default())
}

pub fn euclidean_distance_matrix_with(
    features: &FeatureMatrix,
    execution: Execution,
) -> DissimilarityMatrix {
    let n = features.rows();
    let mut values = vec![0.0; n * n];
    execution.for_each_chunk(&mut values, n, |i, row| {
        let fi = features.row(i);
        for (j, out) in row.iter_mut().enumerate() {
            if i != j {
                // same operand order for (i, j) and (j, i) keeps the result symmetric
                let (a, b) = if i < j { (fi, features.row(j)) } else { (features.row(j), fi) };
                *out = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
            }
        }
    });
    DissimilarityMatrix { n, values }
}

/// `out(i, j) = out(j, i) = max(d(i, j), d(j, i))`.
pub fn symmetrize_max(d: &DissimilarityMatrix) -> DissimilarityMatrix {
    let n = d.len();
    let mut values = d.values.clone();
    for i in 0..n {
        for j in i + 1..n {
            let m = d.get(i, j).max(d.get(j, i));
            values[i * n + j] = m;
            values[j * n + i] = m;
        }
    }
    DissimilarityMatrix { n, values }
}

/// Per-player bandwidths for the exponential similarity kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalScales(Vec<f64>);

impl LocalScales {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if let Some(bad) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(GtgError::input(format!("local scale {bad} is not finite and positive")));
        }
        Ok(LocalScales(sigma))
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `sigma_i` is the distance from `i` to its `min(k_sigma, n - 1)`-th
/// nearest other player, floored at [`SIGMA_FLOOR`].
pub fn local_scales(d: &DissimilarityMatrix, k_sigma: usize) -> Result<LocalScales> {
    let n = d.len();
    if n < 2 {
        return Err(GtgError::input(format!(
            "local scales need at least 2 players, got {n}"
        )));
    }
    if k_sigma < 1 {
        return Err(GtgError::config("scale neighbor rank must be at least 1"));
    }
    let rank = k_sigma.min(n - 1);
    let sigma = (0..n)
        .map(|i| {
            let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
            let (_, kth, _) = others.select_nth_unstable_by(rank - 1, f64::total_cmp);
            kth.max(SIGMA_FLOOR)
        })
        .collect();
    Ok(LocalScales(sigma))
}

/// `exp(-d(i, j) / (sigma_i * sigma_j))`.
///
/// # Panics
///
/// If `i == j`; self-similarity is never part of a neighborhood.
pub fn similarity_from_distance(
    d: &DissimilarityMatrix,
    scales: &LocalScales,
    i: usize,
    j: usize,
) -> f64 {
    assert_ne!(i, j, "self-similarity queried for player {i}");
    (-d.get(i, j) / (scales.sigma(i) * scales.sigma(j))).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub weight: f64,
}

/// Directed weighted neighborhoods, one list per player, each sorted by
/// ascending neighbor index.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityGraph {
    k: usize,
    neighbors: Vec<Vec<Neighbor>>,
}

impl SimilarityGraph {
    /// Builds a graph from explicit `(neighbor, weight)` lists. Weights must
    /// be finite and positive; lists are sorted by neighbor index.
    pub fn from_neighbor_lists(lists: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = lists.len();
        let mut k = 0;
        let mut neighbors = Vec::with_capacity(n);
        for (i, list) in lists.into_iter().enumerate() {
            let mut row: Vec<Neighbor> = list
                .into_iter()
                .map(|(index, weight)| Neighbor { index, weight })
                .collect();
            row.sort_by_key(|nb| nb.index);
            for (pos, nb) in row.iter().enumerate() {
                if nb.index >= n {
                    return Err(GtgError::input(format!(
                        "player {i} has neighbor {} outside 0..{n}",
                        nb.index
                    )));
                }
                if nb.index == i {
                    return Err(GtgError::input(format!("player {i} lists itself as a neighbor")));
                }
                if pos > 0 && row[pos - 1].index == nb.index {
                    return Err(GtgError::input(format!(
                        "player {i} lists neighbor {} twice",
                        nb.index
                    )));
                }
                if !(nb.weight.is_finite() && nb.weight > 0.0) {
                    return Err(GtgError::input(format!(
                        "weight {} on edge ({i}, {}) is not finite and positive",
                        nb.weight, nb.index
                    )));
                }
            }
            k = k.max(row.len());
            neighbors.push(row);
        }
        Ok(SimilarityGraph { k, neighbors })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Requested neighborhood size (the largest list for hand-built graphs).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn neighbors(&self, i: usize) -> &[Neighbor] {
        &self.neighbors[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.neighbors[i]
            .binary_search_by_key(&j, |nb| nb.index)
            .ok()
            .map(|pos| self.neighbors[i][pos].weight)
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn with_scaled_weights(&self, factor: f64) -> SimilarityGraph {
        let neighbors = self
            .neighbors
            .iter()
            .map(|row| {
                row.iter()
                    .map(|nb| Neighbor {
                        index: nb.index,
                        weight: nb.weight * factor,
                    })
                    .collect()
            })
            .collect();
        SimilarityGraph { k: self.k, neighbors }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnnOptions {
    pub k: usize,
    pub scale_neighbors: usize,
    /// Also link `i` to every `j` that has `i` among its own k nearest.
    pub symmetric: bool,
    pub execution: Execution,
}

impl Default for KnnOptions {
    fn default() -> Self {
        KnnOptions {
            k: 2,
            scale_neighbors: DEFAULT_SCALE_NEIGHBORS,
            symmetric: false,
            execution: Execution::default(),
        }
    }
}

/// Directed kNN graph with default local scaling.
pub fn knn_neighborhoods(d: &DissimilarityMatrix, k: usize) -> Result<SimilarityGraph> {
    build_similarity_graph(
        d,
        &KnnOptions {
            k,
            ..KnnOptions::default()
        },
    )
}

pub fn build_similarity_graph(
    d: &DissimilarityMatrix,
    opts: &KnnOptions,
) -> Result<SimilarityGraph> {
    if opts.k < 1 {
        return Err(GtgError::config("neighborhood size k must be at least 1"));
    }
    let scales = local_scales(d, opts.scale_neighbors)?;
    let n = d.len();
    let take = opts.k.min(n - 1);

    let mut lists: Vec<Vec<usize>> = opts.execution.map_indexed(n, |i| {
        let row = d.row(i);
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let by_distance =
            |a: &usize, b: &usize| -> Ordering { row[*a].total_cmp(&row[*b]).then(a.cmp(b)) };
        if take < others.len() {
            others.select_nth_unstable_by(take - 1, by_distance);
            others.truncate(take);
        }
        others.sort_unstable();
        others
    });

    if opts.symmetric {
        let mut extra: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, list) in lists.iter().enumerate() {
            for &j in list {
                extra[j].push(i);
            }
        }
        for (list, more) in lists.iter_mut().zip(extra) {
            list.extend(more);
            list.sort_unstable();
            list.dedup();
        }
    }

    let neighbors = opts.execution.map_indexed(n, |i| {
        lists[i]
            .iter()
            .map(|&j| Neighbor {
                index: j,
                weight: similarity_from_distance(d, &scales, i, j),
            })
            .collect()
    });
    Ok(SimilarityGraph { k: opts.k, neighbors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(rows: &[&[f64]]) -> DissimilarityMatrix {
        DissimilarityMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn euclidean_cases() {
        let f = FeatureMatrix::from_rows(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(euclidean_distance_matrix(&f).get(0, 1), 5.0);

        let f = FeatureMatrix::from_rows(vec![vec![1.0, 7.0], vec![1.0, 7.0]]).unwrap();
        assert_eq!(euclidean_distance_matrix(&f).get(0, 1), 0.0);

        let f = FeatureMatrix::from_rows(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let d = euclidean_distance_matrix(&f);
        for i in 0..3 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..3 {
                if i != j {
                    assert!((d.get(i, j) - 1.41421356).abs() < 1e-8);
                }
            }
        }
        assert!(d.is_symmetric());
    }

    #[test]
    fn non_finite_features_rejected() {
        let err = FeatureMatrix::from_rows(vec![vec![0.0, f64::NAN], vec![1.0, 1.0]]);
        assert!(matches!(err, Err(GtgError::Input(_))));
        assert!(FeatureMatrix::from_rows(vec![vec![1.0, 2.0]]).is_err());
        assert!(FeatureMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn symmetrize_examples() {
        let d = symmetrize_max(&dm(&[&[0.0, 2.0], &[5.0, 0.0]]));
        assert_eq!(d, dm(&[&[0.0, 5.0], &[5.0, 0.0]]));

        let d = symmetrize_max(&dm(&[&[0.0, 1.0, 4.0], &[3.0, 0.0, 2.0], &[4.0, 6.0, 0.0]]));
        assert_eq!(d, dm(&[&[0.0, 3.0, 4.0], &[3.0, 0.0, 6.0], &[4.0, 6.0, 0.0]]));
        assert_eq!(symmetrize_max(&d), d);
    }

    #[test]
    fn matrix_validation() {
        assert!(DissimilarityMatrix::from_rows(vec![vec![0.0, 1.0]]).is_err());
        assert!(DissimilarityMatrix::from_rows(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
        assert!(DissimilarityMatrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(DissimilarityMatrix::from_rows(vec![vec![0.0, f64::INFINITY], vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn local_scale_examples() {
        let d = dm(&[&[0.0, 2.0, 5.0], &[2.0, 0.0, 4.0], &[5.0, 4.0, 0.0]]);
        assert_eq!(local_scales(&d, 7).unwrap().sigma(0), 5.0);

        let zeros = DissimilarityMatrix::new(3, vec![0.0; 9]).unwrap();
        let s = local_scales(&zeros, 7).unwrap();
        assert!(s.as_slice().iter().all(|&v| v == SIGMA_FLOOR));

        let line = FeatureMatrix::new(10, 1, (0..10).map(f64::from).collect()).unwrap();
        let d = euclidean_distance_matrix(&line);
        assert_eq!(local_scales(&d, 7).unwrap().sigma(0), 7.0);

        let single = DissimilarityMatrix::new(1, vec![0.0]).unwrap();
        assert!(local_scales(&single, 7).is_err());
    }

    #[test]
    fn similarity_examples() {
        let d = dm(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let s = LocalScales(vec![1.0, 4.0]);
        let w = similarity_from_distance(&d, &s, 0, 1);
        assert!((w - 0.60653066).abs() < 1e-8);

        let s = LocalScales(vec![1.0, 2.0]);
        assert!((similarity_from_distance(&d, &s, 0, 1) - 0.36787944).abs() < 1e-8);

        let z = DissimilarityMatrix::new(2, vec![0.0; 4]).unwrap();
        assert_eq!(similarity_from_distance(&z, &s, 1, 0), 1.0);
    }

    #[test]
    #[should_panic(expected = "self-similarity")]
    fn self_similarity_panics() {
        let d = dm(&[&[0.0, 2.0], &[2.0, 0.0]]);
        let s = LocalScales(vec![1.0, 1.0]);
        similarity_from_distance(&d, &s, 1, 1);
    }

    #[test]
    fn knn_examples() {
        let d = dm(&[&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.5], &[2.0, 1.5, 0.0]]);
        let g = knn_neighborhoods(&d, 2).unwrap();
        let idx: Vec<usize> = g.neighbors(0).iter().map(|nb| nb.index).collect();
        assert_eq!(idx, vec![1, 2]);

        let d = dm(&[
            &[0.0, 3.0, 3.0, 5.0],
            &[3.0, 0.0, 1.0, 1.0],
            &[3.0, 1.0, 0.0, 1.0],
            &[5.0, 1.0, 1.0, 0.0],
        ]);
        let g = knn_neighborhoods(&d, 2).unwrap();
        let idx: Vec<usize> = g.neighbors(0).iter().map(|nb| nb.index).collect();
        assert_eq!(idx, vec![1, 2]);

        let g = knn_neighborhoods(&d, 7).unwrap();
        assert!((0..4).all(|i| g.neighbors(i).len() == 3));

        assert!(matches!(knn_neighborhoods(&d, 0), Err(GtgError::Config(_))));
    }

    #[test]
    fn symmetric_knn_unions_reverse_edges() {
        // 0 and 1 are close; 2 is far, so 0 and 1 never pick 2 with k=1
        let d = dm(&[&[0.0, 1.0, 9.0], &[1.0, 0.0, 8.0], &[9.0, 8.0, 0.0]]);
        let opts = KnnOptions { k: 1, symmetric: true, ..KnnOptions::default() };
        let g = build_similarity_graph(&d, &opts).unwrap();
        assert_eq!(g.neighbors(1).iter().map(|nb| nb.index).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(g.neighbors(2).len(), 1);
        assert_eq!(g.weight(1, 2), g.weight(2, 1));
    }

    #[test]
    fn hand_built_graph_validation() {
        assert!(SimilarityGraph::from_neighbor_lists(vec![vec![(0, 1.0)], vec![]]).is_err());
        assert!(SimilarityGraph::from_neighbor_lists(vec![vec![(5, 1.0)], vec![]]).is_err());
        assert!(SimilarityGraph::from_neighbor_lists(vec![vec![(1, 0.0)], vec![]]).is_err());
        assert!(SimilarityGraph::from_neighbor_lists(vec![vec![(1, 1.0), (1, 0.5)], vec![]]).is_err());
        let g = SimilarityGraph::from_neighbor_lists(vec![vec![(2, 0.5), (1, 1.0)], vec![], vec![]])
            .unwrap();
        assert_eq!(g.neighbors(0)[0].index, 1);
        assert!(g.neighbors(1).is_empty());
    }
}
