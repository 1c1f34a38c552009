//! Graph learning: a very sparse kNN base graph refined by greedy,
//! objective-checked edge additions.
//!
//! The refinement loop scores non-edges by the gradient of the learning
//! objective at zero weight — effective resistance estimated from a
//! truncated spectral embedding, minus the smoothness and l1 terms — and
//! accepts a batch of top-scoring edges only when the exact objective
//! strictly increases. Everything is deterministic for a fixed input and
//! configuration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    objective, smallest_eigenpairs, ObjectiveParams, SignalMatrix, WeightedGraph,
};
use crate::ingest::InteractionMatrix;

/// Residual tolerance for embedding eigenpairs.
const EIGEN_TOL: f64 = 1e-6;

/// Kernel weights never collapse to exactly zero.
const WEIGHT_FLOOR: f64 = 1e-12;

/// Distance metric for neighbor search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Euclidean,
    CosineDistance,
}

/// Kernel bandwidth selection for edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bandwidth {
    /// Mean squared distance to the k-th neighbor across all nodes.
    SelfTuning,
    /// Caller-supplied squared-distance scale.
    Fixed(f64),
}

/// Node feature vectors: one row per intended graph node.
///
/// For a user graph these are the zero-filled rows of the interaction
/// matrix; for an item graph, zero-filled columns. The same data doubles
/// as the signal matrix of the learning objective.
#[derive(Debug, Clone)]
pub struct FeatureRows {
    signals: SignalMatrix,
}

impl FeatureRows {
    /// Zero-filled user rows of an interaction matrix.
    pub fn from_user_rows(m: &InteractionMatrix) -> Self {
        let rows = (0..m.n_users())
            .map(|u| {
                let (cols, vals) = m.user_row(u);
                cols.iter().copied().zip(vals.iter().copied()).collect()
            })
            .collect();
        Self {
            signals: SignalMatrix::from_sparse_rows(m.n_items(), rows),
        }
    }

    /// Zero-filled columns of an interaction matrix for a subset of items;
    /// node `t` of the resulting graph is `items[t]`.
    pub fn from_item_columns(m: &InteractionMatrix, items: &[usize]) -> Self {
        let rows = items
            .iter()
            .map(|&i| {
                let (users, vals) = m.item_col(i);
                users.iter().copied().zip(vals.iter().copied()).collect()
            })
            .collect();
        Self {
            signals: SignalMatrix::from_sparse_rows(m.n_users(), rows),
        }
    }

    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Self {
        Self {
            signals: SignalMatrix::from_dense_rows(rows),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.signals.n_nodes()
    }

    /// The same rows viewed as graph signals.
    pub fn signals(&self) -> &SignalMatrix {
        &self.signals
    }

    /// Metric distance between two rows: euclidean distance or cosine
    /// distance `1 - cos(x_i, x_j)`. A zero-norm row is at cosine
    /// distance 1 from everything.
    pub fn metric_distance(&self, a: usize, b: usize, metric: Metric) -> f64 {
        match metric {
            Metric::Euclidean => self.signals.dist2(a, b).sqrt(),
            Metric::CosineDistance => {
                let na = self.signals.norm2(a);
                let nb = self.signals.norm2(b);
                if na == 0.0 || nb == 0.0 {
                    return 1.0;
                }
                (1.0 - self.signals.dot(a, b) / (na * nb).sqrt()).max(0.0)
            }
        }
    }

    /// Cosine similarity floored at a tiny positive value, for use as a
    /// positive edge weight.
    pub fn cosine_similarity_floored(&self, a: usize, b: usize) -> f64 {
        let na = self.signals.norm2(a);
        let nb = self.signals.norm2(b);
        if na == 0.0 || nb == 0.0 {
            return WEIGHT_FLOOR;
        }
        (self.signals.dot(a, b) / (na * nb).sqrt()).max(WEIGHT_FLOOR)
    }

    fn check_cosine_degeneracy(&self, metric: Metric) -> Result<()> {
        if metric != Metric::CosineDistance {
            return Ok(());
        }
        let zero_rows: Vec<usize> = (0..self.n_nodes())
            .filter(|&i| self.signals.norm2(i) == 0.0)
            .collect();
        if zero_rows.len() >= 2 {
            return Err(Error::DegenerateFeatures(format!(
                "{} zero-norm rows coincide under the cosine metric (first: {:?})",
                zero_rows.len(),
                &zero_rows[..zero_rows.len().min(4)]
            )));
        }
        Ok(())
    }
}

/// Configuration of the graph-learning pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    /// Base-graph neighborhood size.
    pub k_base: usize,
    /// Candidate-pool neighborhood size.
    pub k_pool: usize,
    /// Spectral embedding dimensions.
    pub embed_dim: usize,
    /// Edges per proposed batch.
    pub batch_size: usize,
    /// Maximum edge count as a multiple of the base graph's.
    pub edge_budget_ratio: f64,
    /// Refinement iteration cap.
    pub max_iters: usize,
    /// l1 weight of the objective.
    pub beta: f64,
    /// Regularization parameter of the precision matrix.
    pub sigma: f64,
    pub kernel_bandwidth: Bandwidth,
    pub metric: Metric,
    pub seed: u64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            k_base: 2,
            k_pool: 10,
            embed_dim: 10,
            batch_size: 50,
            edge_budget_ratio: 1.15,
            max_iters: 50,
            beta: 0.01,
            sigma: 1.0,
            kernel_bandwidth: Bandwidth::SelfTuning,
            metric: Metric::CosineDistance,
            seed: 42,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_base < 1 {
            return Err(Error::InvalidConfig("k_base must be >= 1".into()));
        }
        if self.k_pool < self.k_base {
            return Err(Error::InvalidConfig(format!(
                "k_pool ({}) must be >= k_base ({})",
                self.k_pool, self.k_base
            )));
        }
        if self.embed_dim < 1 {
            return Err(Error::InvalidConfig("embed_dim must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.edge_budget_ratio >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "edge_budget_ratio must be >= 1, got {}",
                self.edge_budget_ratio
            )));
        }
        if let Bandwidth::Fixed(v) = self.kernel_bandwidth {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "fixed kernel bandwidth must be > 0, got {v}"
                )));
            }
        }
        self.objective_params().map(|_| ())
    }

    pub fn objective_params(&self) -> Result<ObjectiveParams> {
        ObjectiveParams::new(self.beta, self.sigma)
    }
}

/// Low-dimensional node coordinates from the smallest precision
/// eigenpairs, scaled so squared coordinate distances approximate
/// effective resistance: `u_i[t] = v_t(i) / sqrt(λ_t)`.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    n_nodes: usize,
    dim: usize,
    /// Eigenvalues of Θ, ascending; all strictly positive.
    eigenvalues: Vec<f64>,
    /// Row-major `n_nodes x dim` coordinates.
    coords: Vec<f64>,
}

impl SpectralEmbedding {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn coords(&self, node: usize) -> &[f64] {
        &self.coords[node * self.dim..(node + 1) * self.dim]
    }

    /// `‖u_i - u_j‖²`; with `dim == n_nodes` this equals the effective
    /// resistance, with fewer dimensions it is a lower bound.
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        let a = self.coords(i);
        let b = self.coords(j);
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    }
}

/// The `r` smallest eigenpairs of `Θ = L + I/σ²`, resistance-scaled.
pub fn spectral_embedding(
    g: &WeightedGraph,
    p: &ObjectiveParams,
    r: usize,
) -> Result<SpectralEmbedding> {
    let n = g.node_count();
    if r > n {
        return Err(Error::InvalidConfig(format!(
            "embedding dimension {r} exceeds node count {n}"
        )));
    }
    let (eigenvalues, vectors) = smallest_eigenpairs(g, p, r, EIGEN_TOL)?;
    let mut coords = vec![0.0; n * r];
    for (t, (lambda, v)) in eigenvalues.iter().zip(&vectors).enumerate() {
        let scale = 1.0 / lambda.sqrt();
        for i in 0..n {
            coords[i * r + t] = v[i] * scale;
        }
    }
    Ok(SpectralEmbedding {
        n_nodes: n,
        dim: r,
        eigenvalues,
        coords,
    })
}

/// A scored non-edge: data distance, embedding distance, and the gain
/// estimate of adding it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateEdge {
    pub i: usize,
    pub j: usize,
    /// Squared euclidean distance between the feature rows.
    pub data_dist2: f64,
    /// Squared embedding distance (truncated-spectrum resistance).
    pub embed_dist2: f64,
    pub gain: f64,
}

/// Symmetrized k-nearest-neighbor graph with Gaussian kernel weights
/// `w = exp(-d²/σ_k²)` under the self-tuning bandwidth.
pub fn knn_graph(feat: &FeatureRows, k: usize, metric: Metric) -> Result<WeightedGraph> {
    knn_graph_with_bandwidth(feat, k, metric, Bandwidth::SelfTuning)
}

/// [`knn_graph`] with an explicit bandwidth mode.
pub fn knn_graph_with_bandwidth(
    feat: &FeatureRows,
    k: usize,
    metric: Metric,
    bandwidth: Bandwidth,
) -> Result<WeightedGraph> {
    let n = feat.n_nodes();
    if k < 1 || k >= n {
        return Err(Error::InvalidConfig(format!(
            "k must satisfy 1 <= k < node count; got k={k}, nodes={n}"
        )));
    }
    feat.check_cosine_degeneracy(metric)?;

    let per_node = nearest_neighbors(feat, k, metric);
    let sigma2 = match bandwidth {
        Bandwidth::Fixed(v) => v,
        Bandwidth::SelfTuning => self_tuning_bandwidth(&per_node),
    };

    // Union symmetrization: keep a pair once whichever side selected it.
    let mut pairs: std::collections::BTreeMap<(usize, usize), f64> =
        std::collections::BTreeMap::new();
    for (i, nbrs) in per_node.iter().enumerate() {
        for &(j, sqd) in nbrs {
            let key = (i.min(j), i.max(j));
            pairs.entry(key).or_insert(sqd);
        }
    }
    let edges: Vec<(usize, usize, f64)> = pairs
        .into_iter()
        .map(|((i, j), sqd)| (i, j, kernel_weight(sqd, sigma2)))
        .collect();
    WeightedGraph::new(n, edges)
}

/// Per-node `k` nearest neighbors as `(neighbor, squared metric distance)`,
/// nearest first, distance ties broken by the smaller node index.
fn nearest_neighbors(feat: &FeatureRows, k: usize, metric: Metric) -> Vec<Vec<(usize, f64)>> {
    let n = feat.n_nodes();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut dists: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (feat.metric_distance(i, j, metric), j))
                .collect();
            dists.sort_unstable_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });
            dists
                .into_iter()
                .take(k)
                .map(|(d, j)| (j, d * d))
                .collect()
        })
        .collect()
}

/// Mean squared distance to the k-th neighbor, floored away from zero.
fn self_tuning_bandwidth(per_node: &[Vec<(usize, f64)>]) -> f64 {
    let n = per_node.len();
    let mean = per_node
        .iter()
        .map(|nbrs| nbrs.last().map_or(0.0, |&(_, sqd)| sqd))
        .sum::<f64>()
        / n as f64;
    mean.max(1e-30)
}

fn kernel_weight(sqd: f64, sigma2: f64) -> f64 {
    (-sqd / sigma2).exp().max(WEIGHT_FLOOR)
}

/// Score the candidate pool against the current graph and embedding.
///
/// Candidates are the k_pool-nearest data-space pairs that are not yet
/// edges; the gain is the truncated-spectrum estimate of the objective
/// derivative at zero edge weight:
/// `embed_dist2 - data_dist2/divisor - 2β`. Sorted by gain descending,
/// ties by (i, j).
pub fn score_candidates(
    feat: &FeatureRows,
    emb: &SpectralEmbedding,
    g: &WeightedGraph,
    cfg: &LearnConfig,
) -> Result<Vec<CandidateEdge>> {
    if emb.n_nodes() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: emb.n_nodes(),
            context: "embedding nodes vs graph nodes",
        });
    }
    let pool = candidate_pool(feat, cfg.k_pool, cfg.metric)?;
    Ok(score_pool(&pool, feat, emb, g, cfg))
}

/// Deduplicated k_pool-nearest pairs `(i, j, data_dist2)` with `i < j`.
fn candidate_pool(
    feat: &FeatureRows,
    k_pool: usize,
    metric: Metric,
) -> Result<Vec<(usize, usize, f64)>> {
    let n = feat.n_nodes();
    let k = k_pool.min(n.saturating_sub(1));
    if k == 0 {
        return Ok(Vec::new());
    }
    feat.check_cosine_degeneracy(metric)?;
    let per_node = nearest_neighbors(feat, k, metric);
    let mut pairs: std::collections::BTreeSet<(usize, usize)> =
        std::collections::BTreeSet::new();
    for (i, nbrs) in per_node.iter().enumerate() {
        for &(j, _) in nbrs {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    Ok(pairs
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| (i, j, feat.signals().dist2(i, j)))
        .collect())
}

fn score_pool(
    pool: &[(usize, usize, f64)],
    feat: &FeatureRows,
    emb: &SpectralEmbedding,
    g: &WeightedGraph,
    cfg: &LearnConfig,
) -> Vec<CandidateEdge> {
    let divisor = feat.signals().covariance_divisor() as f64;
    let mut scored: Vec<CandidateEdge> = pool
        .par_iter()
        .filter(|(i, j, _)| !g.has_edge(*i, *j))
        .map(|&(i, j, data_dist2)| {
            let embed_dist2 = emb.dist2(i, j);
            CandidateEdge {
                i,
                j,
                data_dist2,
                embed_dist2,
                gain: embed_dist2 - data_dist2 / divisor - 2.0 * cfg.beta,
            }
        })
        .collect();
    scored.sort_unstable_by(|a, b| {
        b.gain
            .partial_cmp(&a.gain)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then((a.i, a.j).cmp(&(b.i, b.j)))
    });
    scored
}

/// Refine a base graph by batched, objective-checked edge additions.
///
/// Each iteration embeds the current graph, scores candidates, and
/// proposes the top positive-gain batch with kernel weights. A batch is
/// accepted only if the exact objective strictly increases; otherwise the
/// batch size is halved and the proposal retried. Stops when the batch
/// size reaches zero, no positive candidates remain, the edge budget
/// `|E| <= edge_budget_ratio * |E_base|` is saturated, or `max_iters`
/// elapses. Base edges are never touched.
pub fn refine_graph(
    base: &WeightedGraph,
    feat: &FeatureRows,
    cfg: &LearnConfig,
) -> Result<WeightedGraph> {
    cfg.validate()?;
    if feat.n_nodes() != base.node_count() {
        return Err(Error::DimensionMismatch {
            expected: base.node_count(),
            got: feat.n_nodes(),
            context: "feature rows vs graph nodes",
        });
    }
    let params = cfg.objective_params()?;
    let signals = feat.signals();
    let n = base.node_count();
    let max_edges = (cfg.edge_budget_ratio * base.edge_count() as f64).floor() as usize;
    let r = cfg.embed_dim.min(n);

    // Computed once: the candidate pairs and the kernel bandwidth depend
    // only on the features.
    let pool = candidate_pool(feat, cfg.k_pool, cfg.metric)?;
    let sigma2 = match cfg.kernel_bandwidth {
        Bandwidth::Fixed(v) => v,
        Bandwidth::SelfTuning => {
            self_tuning_bandwidth(&nearest_neighbors(feat, cfg.k_base, cfg.metric))
        }
    };

    let mut g = base.clone();
    let mut obj = objective(&g, signals, &params)?;
    let mut batch_size = cfg.batch_size;

    for _iter in 0..cfg.max_iters {
        if batch_size == 0 || g.edge_count() >= max_edges {
            break;
        }
        let emb = spectral_embedding(&g, &params, r)?;
        let scored = score_pool(&pool, feat, &emb, &g, cfg);
        let positive: Vec<&CandidateEdge> =
            scored.iter().take_while(|c| c.gain > 0.0).collect();
        if positive.is_empty() {
            break;
        }

        let mut accepted = false;
        while batch_size > 0 {
            let take = batch_size
                .min(positive.len())
                .min(max_edges - g.edge_count());
            if take == 0 {
                break;
            }
            let batch: Vec<(usize, usize, f64)> = positive[..take]
                .iter()
                .map(|c| {
                    let d = feat.metric_distance(c.i, c.j, cfg.metric);
                    (c.i, c.j, kernel_weight(d * d, sigma2))
                })
                .collect();
            let trial = g.with_added_edges(&batch)?;
            let trial_obj = objective(&trial, signals, &params)?;
            if trial_obj > obj {
                g = trial;
                obj = trial_obj;
                accepted = true;
                break;
            }
            batch_size /= 2;
        }
        if !accepted {
            break;
        }
    }
    Ok(g)
}

/// Learn a user graph from an interaction matrix: kNN base graph over the
/// zero-filled rating rows, then refinement with the same rows as signals.
pub fn learn_user_graph(m: &InteractionMatrix, cfg: &LearnConfig) -> Result<WeightedGraph> {
    cfg.validate()?;
    if m.nnz() == 0 {
        return Err(Error::EmptyDataset);
    }
    let feat = FeatureRows::from_user_rows(m);
    let base = knn_graph_with_bandwidth(&feat, cfg.k_base, cfg.metric, cfg.kernel_bandwidth)?;
    refine_graph(&base, &feat, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::effective_resistance;
    use approx::assert_abs_diff_eq;

    fn tight_two_clusters() -> FeatureRows {
        // Two clusters of three points on a line, far apart.
        FeatureRows::from_dense_rows(&[
            vec![0.00, 1.0],
            vec![0.05, 1.0],
            vec![0.10, 1.0],
            vec![9.00, 1.0],
            vec![9.05, 1.0],
            vec![9.10, 1.0],
        ])
    }

    #[test]
    fn knn_collinear_points() {
        let feat = FeatureRows::from_dense_rows(&[vec![0.0], vec![1.0], vec![10.0]]);
        let g = knn_graph(&feat, 1, Metric::Euclidean).unwrap();
        let pairs: Vec<(usize, usize)> = g.edges().iter().map(|e| (e.i, e.j)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn knn_two_nodes_self_tuning_weight() {
        let feat = FeatureRows::from_dense_rows(&[vec![0.0], vec![3.0]]);
        let g = knn_graph(&feat, 1, Metric::Euclidean).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_abs_diff_eq!(g.edges()[0].weight, (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn knn_edge_count_bound() {
        let feat = tight_two_clusters();
        let g = knn_graph(&feat, 2, Metric::Euclidean).unwrap();
        assert!(g.edge_count() <= 2 * feat.n_nodes());
    }

    #[test]
    fn knn_rejects_bad_k() {
        let feat = FeatureRows::from_dense_rows(&[vec![0.0], vec![1.0]]);
        assert!(knn_graph(&feat, 0, Metric::Euclidean).is_err());
        assert!(knn_graph(&feat, 2, Metric::Euclidean).is_err());
    }

    #[test]
    fn knn_identical_rows_become_adjacent() {
        let feat = FeatureRows::from_dense_rows(&[
            vec![1.0, 2.0],
            vec![1.0, 2.0],
            vec![50.0, -3.0],
        ]);
        let g = knn_graph(&feat, 1, Metric::Euclidean).unwrap();
        assert!(g.has_edge(0, 1));
    }

    #[test]
    fn cosine_degeneracy_detection() {
        let feat = FeatureRows::from_dense_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
        ]);
        assert!(matches!(
            knn_graph(&feat, 1, Metric::CosineDistance),
            Err(Error::DegenerateFeatures(_))
        ));
        // A single zero row is tolerated: distance 1 from everything.
        let feat = FeatureRows::from_dense_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.9, 0.1],
        ]);
        assert!(knn_graph(&feat, 1, Metric::CosineDistance).is_ok());
    }

    #[test]
    fn embedding_of_edgeless_graph() {
        let g = WeightedGraph::edgeless(4);
        let p = ObjectiveParams::new(0.0, 1.0).unwrap();
        let emb = spectral_embedding(&g, &p, 4).unwrap();
        for l in emb.eigenvalues() {
            assert_abs_diff_eq!(*l, 1.0, epsilon = 1e-9);
        }
        // λ = 1 everywhere, so embedding distances equal raw eigenvector
        // coordinate distances.
        for i in 0..4 {
            for j in 0..4 {
                let raw: f64 = (0..4)
                    .map(|t| {
                        let d = emb.coords(i)[t] - emb.coords(j)[t];
                        d * d
                    })
                    .sum();
                assert_abs_diff_eq!(emb.dist2(i, j), raw, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn embedding_path_graph_eigenvalues() {
        let g = WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let p = ObjectiveParams::new(0.0, 1.0).unwrap();
        let emb = spectral_embedding(&g, &p, 3).unwrap();
        let want = [1.0, 2.0, 4.0];
        for (got, want) in emb.eigenvalues().iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-8);
        }
    }

    #[test]
    fn full_embedding_reproduces_resistance() {
        let feat = tight_two_clusters();
        let g = knn_graph(&feat, 2, Metric::Euclidean).unwrap();
        let p = ObjectiveParams::new(0.0, 1.0).unwrap();
        let emb = spectral_embedding(&g, &p, g.node_count()).unwrap();
        for i in 0..g.node_count() {
            for j in (i + 1)..g.node_count() {
                let r = effective_resistance(&g, &p, i, j).unwrap();
                assert_abs_diff_eq!(emb.dist2(i, j), r, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn embedding_rejects_oversized_rank() {
        let g = WeightedGraph::edgeless(3);
        let p = ObjectiveParams::new(0.0, 1.0).unwrap();
        assert!(spectral_embedding(&g, &p, 4).is_err());
    }

    #[test]
    fn duplicate_rows_far_in_embedding_score_positive() {
        // Nodes 0 and 1 share features but sit in different base-graph
        // regions; with β = 0 the gain reduces to the embedding distance.
        let feat = FeatureRows::from_dense_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![40.0, 0.0],
            vec![41.0, 0.0],
        ]);
        let base =
            WeightedGraph::new(4, vec![(0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]).unwrap();
        let cfg = LearnConfig {
            beta: 0.0,
            k_pool: 3,
            metric: Metric::Euclidean,
            ..LearnConfig::default()
        };
        let p = cfg.objective_params().unwrap();
        let emb = spectral_embedding(&base, &p, 4).unwrap();
        let scored = score_candidates(&feat, &emb, &base, &cfg).unwrap();
        let c = scored
            .iter()
            .find(|c| (c.i, c.j) == (0, 1))
            .expect("duplicate pair is in the pool");
        assert_eq!(c.data_dist2, 0.0);
        assert!(c.gain > 0.0);
        assert_abs_diff_eq!(c.gain, c.embed_dist2, epsilon = 1e-12);
    }

    #[test]
    fn huge_beta_empties_the_positive_set() {
        let feat = tight_two_clusters();
        let base = knn_graph(&feat, 1, Metric::Euclidean).unwrap();
        let cfg = LearnConfig {
            beta: 1e6,
            metric: Metric::Euclidean,
            ..LearnConfig::default()
        };
        let p = ObjectiveParams::new(cfg.beta, cfg.sigma).unwrap();
        let emb = spectral_embedding(&base, &p, base.node_count()).unwrap();
        let scored = score_candidates(&feat, &emb, &base, &cfg).unwrap();
        assert!(scored.iter().all(|c| c.gain < 0.0));
    }

    #[test]
    fn missing_within_cluster_link_outscores_cross_cluster() {
        // Base graph: each cluster chained internally except one missing
        // link (0-2); one weak bridge. Exact gradient via full embedding.
        let feat = tight_two_clusters();
        let base = WeightedGraph::new(
            6,
            vec![
                (0, 1, 1.0),
                (1, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (2, 3, 0.1),
            ],
        )
        .unwrap();
        let cfg = LearnConfig {
            beta: 0.0,
            k_pool: 5,
            embed_dim: 6,
            metric: Metric::Euclidean,
            ..LearnConfig::default()
        };
        let p = cfg.objective_params().unwrap();
        let emb = spectral_embedding(&base, &p, 6).unwrap();
        let scored = score_candidates(&feat, &emb, &base, &cfg).unwrap();

        let within = scored.iter().find(|c| (c.i, c.j) == (0, 2)).unwrap();
        for c in &scored {
            let cross = (c.i < 3) != (c.j < 3);
            if cross {
                assert!(
                    within.gain > c.gain,
                    "within-cluster gain {} not above cross pair ({}, {}) gain {}",
                    within.gain,
                    c.i,
                    c.j,
                    c.gain
                );
            }
        }

        // The exact zero-weight derivative agrees with the full embedding:
        // resistance minus smoothness term (β = 0).
        let exact = effective_resistance(&base, &p, 0, 2).unwrap()
            - feat.signals().dist2(0, 2) / feat.signals().covariance_divisor() as f64;
        assert_abs_diff_eq!(within.gain, exact, epsilon = 1e-8);
    }

    #[test]
    fn refine_with_huge_beta_returns_base() {
        let feat = tight_two_clusters();
        let base = knn_graph(&feat, 1, Metric::Euclidean).unwrap();
        let cfg = LearnConfig {
            beta: 1e6,
            metric: Metric::Euclidean,
            k_pool: 4,
            ..LearnConfig::default()
        };
        let refined = refine_graph(&base, &feat, &cfg).unwrap();
        assert_eq!(refined, base);
    }

    #[test]
    fn refine_with_unit_budget_returns_base() {
        let feat = tight_two_clusters();
        let base = knn_graph(&feat, 1, Metric::Euclidean).unwrap();
        let cfg = LearnConfig {
            edge_budget_ratio: 1.0,
            beta: 0.0,
            metric: Metric::Euclidean,
            ..LearnConfig::default()
        };
        let refined = refine_graph(&base, &feat, &cfg).unwrap();
        assert_eq!(refined, base);
    }

    #[test]
    fn refine_two_cluster_improves_objective_and_respects_budget() {
        // 20 nodes in two clusters; sparse base graph.
        let mut rows = Vec::new();
        for i in 0..10 {
            rows.push(vec![0.1 * i as f64, 5.0, 0.0]);
        }
        for i in 0..10 {
            rows.push(vec![30.0 + 0.1 * i as f64, -5.0, 1.0]);
        }
        let feat = FeatureRows::from_dense_rows(&rows);
        let base = knn_graph(&feat, 2, Metric::Euclidean).unwrap();
        let cfg = LearnConfig {
            beta: 1e-4,
            sigma: 1.0,
            k_pool: 8,
            embed_dim: 6,
            batch_size: 4,
            edge_budget_ratio: 1.3,
            metric: Metric::Euclidean,
            ..LearnConfig::default()
        };
        let p = cfg.objective_params().unwrap();
        let signals = feat.signals();
        let base_obj = objective(&base, signals, &p).unwrap();

        let refined = refine_graph(&base, &feat, &cfg).unwrap();
        let refined_obj = objective(&refined, signals, &p).unwrap();

        assert!(refined.edge_count() > base.edge_count(), "no batch accepted");
        assert!(refined_obj > base_obj);
        assert!(
            refined.edge_count() as f64 <= cfg.edge_budget_ratio * base.edge_count() as f64
        );
        // Base edges persist.
        for e in base.edges() {
            assert!(refined.has_edge(e.i, e.j));
        }
        // Determinism.
        let again = refine_graph(&base, &feat, &cfg).unwrap();
        assert_eq!(refined, again);
    }

    #[test]
    fn learn_user_graph_single_user_fails() {
        use crate::ingest::{parse_movielens, to_matrix};
        let ds =
            parse_movielens(std::io::Cursor::new(&b"1\t1\t3\t1\n1\t2\t4\t2\n"[..])).unwrap();
        let m = to_matrix(&ds).unwrap();
        let cfg = LearnConfig::default();
        assert!(learn_user_graph(&m, &cfg).is_err());
    }

    #[test]
    fn learn_user_graph_identical_users_adjacent() {
        use crate::ingest::{parse_movielens, to_matrix};
        let text = "1\t1\t5\t1\n1\t2\t3\t1\n2\t1\t5\t1\n2\t2\t3\t1\n3\t3\t1\t1\n3\t1\t2\t1\n4\t2\t4\t1\n4\t3\t2\t1\n";
        let ds = parse_movielens(std::io::Cursor::new(text.as_bytes())).unwrap();
        let m = to_matrix(&ds).unwrap();
        let cfg = LearnConfig {
            k_base: 1,
            k_pool: 2,
            embed_dim: 2,
            ..LearnConfig::default()
        };
        let g = learn_user_graph(&m, &cfg).unwrap();
        // Users 0 and 1 rated identically; distance 0 is minimal.
        assert!(g.has_edge(0, 1));
    }
}
