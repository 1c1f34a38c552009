//! Sparse weighted graphs and the numeric operators built on them:
//! Laplacian and precision views, the smoothness functional, the
//! log-det / smoothness / l1 learning objective, and generalized
//! effective resistance.

mod cholesky;
mod eigen;

pub use cholesky::PrecisionFactor;
pub use eigen::smallest_eigenpairs;

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One undirected edge, canonical with `i < j` and `weight > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected, weighted, self-loop-free graph.
///
/// Edges are stored once in canonical `(i, j)` order with `i < j` and
/// interpreted symmetrically. Construction validates every invariant;
/// instances are immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    adj_ptr: Vec<usize>,
    adj_nbr: Vec<u32>,
    adj_w: Vec<f64>,
}

impl WeightedGraph {
    /// Build a graph from `(i, j, weight)` triples.
    ///
    /// Endpoint order inside a triple does not matter; pairs are
    /// canonicalized to `i < j`. Self-loops, duplicate pairs,
    /// non-positive or non-finite weights, and out-of-range endpoints
    /// are rejected.
    pub fn new(node_count: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut canon: Vec<Edge> = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidConfig(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::IndexOutOfRange {
                    index: a.max(b),
                    size: node_count,
                    context: "graph node",
                });
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "edge ({a}, {b}) has non-positive or non-finite weight {w}"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            canon.push(Edge { i, j, weight: w });
        }
        canon.sort_unstable_by(|a, b| (a.i, a.j).cmp(&(b.i, b.j)));
        for pair in canon.windows(2) {
            if pair[0].i == pair[1].i && pair[0].j == pair[1].j {
                return Err(Error::InvalidConfig(format!(
                    "duplicate edge ({}, {})",
                    pair[0].i, pair[0].j
                )));
            }
        }

        let (adj_ptr, adj_nbr, adj_w) = build_adjacency(node_count, &canon);
        Ok(Self {
            node_count,
            edges: canon,
            adj_ptr,
            adj_nbr,
            adj_w,
        })
    }

    /// Graph with no edges.
    pub fn edgeless(node_count: usize) -> Self {
        Self::new(node_count, Vec::new()).expect("edgeless graph is always valid")
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Number of stored undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of a node with edge weights, sorted by neighbor index.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.adj_ptr[node];
        let hi = self.adj_ptr[node + 1];
        self.adj_nbr[lo..hi]
            .iter()
            .zip(&self.adj_w[lo..hi])
            .map(|(&n, &w)| (n as usize, w))
    }

    /// Weighted degree of a node.
    pub fn degree(&self, node: usize) -> f64 {
        let lo = self.adj_ptr[node];
        let hi = self.adj_ptr[node + 1];
        self.adj_w[lo..hi].iter().sum()
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&(i, j)))
            .is_ok()
    }

    /// New graph with extra edges added; existing edges are untouched.
    pub fn with_added_edges(&self, extra: &[(usize, usize, f64)]) -> Result<Self> {
        let mut all: Vec<(usize, usize, f64)> =
            self.edges.iter().map(|e| (e.i, e.j, e.weight)).collect();
        all.extend_from_slice(extra);
        Self::new(self.node_count, all)
    }

    pub fn laplacian(&self) -> LaplacianView<'_> {
        LaplacianView { graph: self }
    }

    /// Write the text edge-list form: a `nodes N edges M` header, then one
    /// `i j w` line per edge in canonical order.
    pub fn save_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "nodes {} edges {}", self.node_count, self.edges.len())?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.i, e.j, e.weight)?;
        }
        Ok(())
    }

    /// Parse the edge-list form written by [`save_edge_list`].
    ///
    /// [`save_edge_list`]: WeightedGraph::save_edge_list
    pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidFormat("missing edge-list header".into()))??;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 4 || tokens[0] != "nodes" || tokens[2] != "edges" {
            return Err(Error::InvalidFormat(format!(
                "bad edge-list header: {header:?}"
            )));
        }
        let node_count: usize = tokens[1]
            .parse()
            .map_err(|_| Error::InvalidFormat(format!("bad node count: {:?}", tokens[1])))?;
        let edge_count: usize = tokens[3]
            .parse()
            .map_err(|_| Error::InvalidFormat(format!("bad edge count: {:?}", tokens[3])))?;

        let mut edges = Vec::with_capacity(edge_count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::InvalidFormat(format!("bad edge line: {line:?}")));
            }
            let i: usize = parts[0]
                .parse()
                .map_err(|_| Error::InvalidFormat(format!("bad endpoint: {:?}", parts[0])))?;
            let j: usize = parts[1]
                .parse()
                .map_err(|_| Error::InvalidFormat(format!("bad endpoint: {:?}", parts[1])))?;
            let w: f64 = parts[2]
                .parse()
                .map_err(|_| Error::InvalidFormat(format!("bad weight: {:?}", parts[2])))?;
            edges.push((i, j, w));
        }
        if edges.len() != edge_count {
            return Err(Error::InvalidFormat(format!(
                "header promised {edge_count} edges, found {}",
                edges.len()
            )));
        }
        Self::new(node_count, edges)
    }
}

fn build_adjacency(node_count: usize, edges: &[Edge]) -> (Vec<usize>, Vec<u32>, Vec<f64>) {
    let mut ptr = vec![0usize; node_count + 1];
    for e in edges {
        ptr[e.i + 1] += 1;
        ptr[e.j + 1] += 1;
    }
    for v in 0..node_count {
        ptr[v + 1] += ptr[v];
    }
    let mut cursor = ptr.clone();
    let mut nbr = vec![0u32; edges.len() * 2];
    let mut w = vec![0.0f64; edges.len() * 2];
    for e in edges {
        nbr[cursor[e.i]] = e.j as u32;
        w[cursor[e.i]] = e.weight;
        cursor[e.i] += 1;
        nbr[cursor[e.j]] = e.i as u32;
        w[cursor[e.j]] = e.weight;
        cursor[e.j] += 1;
    }
    // Edges arrive sorted by (i, j), so each i-run is already sorted; the
    // j-side entries interleave, so sort each run to keep lookups binary.
    for v in 0..node_count {
        let lo = ptr[v];
        let hi = ptr[v + 1];
        let mut pairs: Vec<(u32, f64)> = nbr[lo..hi]
            .iter()
            .copied()
            .zip(w[lo..hi].iter().copied())
            .collect();
        pairs.sort_unstable_by_key(|p| p.0);
        for (offset, (n, weight)) in pairs.into_iter().enumerate() {
            nbr[lo + offset] = n;
            w[lo + offset] = weight;
        }
    }
    (ptr, nbr, w)
}

/// Implicit Laplacian operator `L = D - W` of a graph.
#[derive(Debug, Clone, Copy)]
pub struct LaplacianView<'g> {
    graph: &'g WeightedGraph,
}

impl<'g> LaplacianView<'g> {
    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count
    }

    /// `y = L x` without materializing `L`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.graph.node_count;
        let mut y = vec![0.0; n];
        for v in 0..n {
            y[v] = self.graph.degree(v) * x[v];
        }
        for e in &self.graph.edges {
            y[e.i] -= e.weight * x[e.j];
            y[e.j] -= e.weight * x[e.i];
        }
        y
    }

    /// Dense row-major `n x n` materialization.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.graph.node_count;
        let mut m = vec![0.0; n * n];
        for v in 0..n {
            m[v * n + v] = self.graph.degree(v);
        }
        for e in &self.graph.edges {
            m[e.i * n + e.j] = -e.weight;
            m[e.j * n + e.i] = -e.weight;
        }
        m
    }
}

/// Implicit precision operator `Θ = L + I/σ²`.
#[derive(Debug, Clone, Copy)]
pub struct PrecisionView<'g> {
    graph: &'g WeightedGraph,
    sigma: f64,
}

impl<'g> PrecisionView<'g> {
    pub fn new(graph: &'g WeightedGraph, params: &ObjectiveParams) -> Self {
        Self {
            graph,
            sigma: params.sigma(),
        }
    }

    /// Diagonal shift `1/σ²`.
    pub fn shift(&self) -> f64 {
        1.0 / (self.sigma * self.sigma)
    }

    /// `y = Θ x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.graph.laplacian().matvec(x);
        let a = self.shift();
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += a * xi;
        }
        y
    }

    /// Dense row-major materialization of `Θ`.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.graph.node_count;
        let mut m = self.graph.laplacian().to_dense();
        let a = self.shift();
        for v in 0..n {
            m[v * n + v] += a;
        }
        m
    }

    /// Entry-wise l1 norm of `Θ` including the diagonal.
    ///
    /// All diagonal entries are positive and off-diagonals appear twice,
    /// so the norm reduces to `4 Σ_e w_e + n/σ²`.
    pub fn l1_norm(&self) -> f64 {
        4.0 * self.graph.total_weight() + self.graph.node_count as f64 * self.shift()
    }
}

/// Parameters of the learning objective: l1 weight β ≥ 0 and
/// regularization σ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParams {
    beta: f64,
    sigma: f64,
}

impl ObjectiveParams {
    pub fn new(beta: f64, sigma: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta must be finite and >= 0, got {beta}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sigma must be finite and > 0, got {sigma}"
            )));
        }
        Ok(Self { beta, sigma })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// Node-indexed signal rows: an `n_nodes x dim` matrix stored sparsely,
/// with the column count that divides the empirical covariance.
#[derive(Debug, Clone)]
pub struct SignalMatrix {
    n_nodes: usize,
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    norms2: Vec<f64>,
    divisor: usize,
}

impl SignalMatrix {
    /// Build from sparse rows; each row is a sorted-by-column list of
    /// `(column, value)` pairs. Zero values may be omitted.
    pub fn from_sparse_rows(dim: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n_nodes = rows.len();
        let mut row_ptr = Vec::with_capacity(n_nodes + 1);
        row_ptr.push(0usize);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut norms2 = Vec::with_capacity(n_nodes);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            let mut n2 = 0.0;
            for (c, v) in row {
                debug_assert!((c as usize) < dim);
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                    n2 += v * v;
                }
            }
            row_ptr.push(cols.len());
            norms2.push(n2);
        }
        Self {
            n_nodes,
            dim,
            row_ptr,
            cols,
            vals,
            norms2,
            divisor: dim.max(1),
        }
    }

    /// Build from dense rows (mainly for tests and small fixtures).
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        let sparse = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(c, v)| (c as u32, *v))
                    .collect()
            })
            .collect();
        Self::from_sparse_rows(dim, sparse)
    }

    /// Override the covariance divisor (defaults to the column count).
    pub fn with_covariance_divisor(mut self, divisor: usize) -> Result<Self> {
        if divisor == 0 {
            return Err(Error::InvalidConfig(
                "covariance divisor must be >= 1".into(),
            ));
        }
        self.divisor = divisor;
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of signal columns.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Divisor applied to the empirical covariance in the objective.
    pub fn covariance_divisor(&self) -> usize {
        self.divisor
    }

    pub fn row(&self, node: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[node];
        let hi = self.row_ptr[node + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn norm2(&self, node: usize) -> f64 {
        self.norms2[node]
    }

    /// Squared Frobenius norm.
    pub fn frob2(&self) -> f64 {
        self.norms2.iter().sum()
    }

    /// Sparse dot product of two rows.
    pub fn dot(&self, a: usize, b: usize) -> f64 {
        let (ca, va) = self.row(a);
        let (cb, vb) = self.row(b);
        let mut s = 0.0;
        let (mut p, mut q) = (0usize, 0usize);
        while p < ca.len() && q < cb.len() {
            match ca[p].cmp(&cb[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    s += va[p] * vb[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        s
    }

    /// Squared euclidean distance between two rows.
    pub fn dist2(&self, a: usize, b: usize) -> f64 {
        let d2 = self.norms2[a] + self.norms2[b] - 2.0 * self.dot(a, b);
        d2.max(0.0)
    }

    /// Dense copy of one row.
    pub fn dense_row(&self, node: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let (cols, vals) = self.row(node);
        for (c, v) in cols.iter().zip(vals) {
            out[*c as usize] = *v;
        }
        out
    }
}

/// Smoothness of signals over a graph: `Tr(X L Xᵀ) = Σ_e w_e ‖x_i - x_j‖²`.
///
/// Always non-negative; zero for an edgeless graph.
pub fn smoothness(x: &SignalMatrix, lap: &LaplacianView<'_>) -> Result<f64> {
    if x.n_nodes() != lap.node_count() {
        return Err(Error::DimensionMismatch {
            expected: lap.node_count(),
            got: x.n_nodes(),
            context: "signal rows vs graph nodes",
        });
    }
    let mut q = 0.0;
    for e in lap.graph().edges() {
        q += e.weight * x.dist2(e.i, e.j);
    }
    Ok(q)
}

/// The graph-learning objective
/// `log det(Θ) - Tr(X Xᵀ Θ)/divisor - β ‖Θ‖₁` with `Θ = L + I/σ²`.
///
/// The trace term expands to `(Tr(X L Xᵀ) + ‖X‖_F²/σ²)/divisor`, so no
/// covariance matrix is ever formed. The log-determinant comes from a
/// symmetric triangular factorization of `Θ`.
pub fn objective(g: &WeightedGraph, x: &SignalMatrix, p: &ObjectiveParams) -> Result<f64> {
    if x.n_nodes() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: x.n_nodes(),
            context: "signal rows vs graph nodes",
        });
    }
    let factor = PrecisionFactor::new(g, p)?;
    let view = PrecisionView::new(g, p);
    let trace = (smoothness(x, &g.laplacian())? + view.shift() * x.frob2())
        / x.covariance_divisor() as f64;
    Ok(factor.log_det() - trace - p.beta() * view.l1_norm())
}

/// Generalized effective resistance
/// `R_Θ(i, j) = (e_i - e_j)ᵀ Θ⁻¹ (e_i - e_j)`.
///
/// Equals the partial derivative of `log det Θ` with respect to the weight
/// of edge `(i, j)`; symmetric in its endpoints; zero when `i == j`.
pub fn effective_resistance(
    g: &WeightedGraph,
    p: &ObjectiveParams,
    i: usize,
    j: usize,
) -> Result<f64> {
    let n = g.node_count();
    for idx in [i, j] {
        if idx >= n {
            return Err(Error::IndexOutOfRange {
                index: idx,
                size: n,
                context: "resistance endpoint",
            });
        }
    }
    if i == j {
        return Ok(0.0);
    }
    let factor = PrecisionFactor::new(g, p)?;
    Ok(factor.pair_resistance(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_triangle() -> WeightedGraph {
        WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    #[test]
    fn construction_canonicalizes_and_validates() {
        let g = WeightedGraph::new(3, vec![(2, 0, 0.5), (1, 2, 2.0)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges()[0], Edge { i: 0, j: 2, weight: 0.5 });
        assert!(g.has_edge(0, 2));
        assert!(g.has_edge(2, 0));
        assert!(!g.has_edge(0, 1));

        assert!(WeightedGraph::new(3, vec![(1, 1, 1.0)]).is_err());
        assert!(WeightedGraph::new(3, vec![(0, 1, 0.0)]).is_err());
        assert!(WeightedGraph::new(3, vec![(0, 1, -2.0)]).is_err());
        assert!(WeightedGraph::new(3, vec![(0, 3, 1.0)]).is_err());
        assert!(WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 0, 2.0)]).is_err());
    }

    #[test]
    fn laplacian_of_single_edge() {
        let g = WeightedGraph::new(2, vec![(0, 1, 1.0)]).unwrap();
        let l = g.laplacian().to_dense();
        assert_eq!(l, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn laplacian_of_unit_triangle() {
        let g = unit_triangle();
        let l = g.laplacian().to_dense();
        for v in 0..3 {
            assert_eq!(l[v * 3 + v], 2.0);
            for u in 0..3 {
                if u != v {
                    assert_eq!(l[v * 3 + u], -1.0);
                }
            }
        }
    }

    #[test]
    fn laplacian_of_edgeless_graph_is_zero() {
        let g = WeightedGraph::edgeless(5);
        assert!(g.laplacian().to_dense().iter().all(|&v| v == 0.0));
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn edge_counts() {
        assert_eq!(WeightedGraph::edgeless(4).edge_count(), 0);
        assert_eq!(unit_triangle().edge_count(), 3);
    }

    #[test]
    fn smoothness_of_edgeless_graph_is_zero() {
        let g = WeightedGraph::edgeless(4);
        let x = SignalMatrix::from_dense_rows(&[
            vec![1.0, 2.0],
            vec![-3.0, 0.5],
            vec![0.0, 0.0],
            vec![9.0, -9.0],
        ]);
        assert_eq!(smoothness(&x, &g.laplacian()).unwrap(), 0.0);
    }

    #[test]
    fn smoothness_of_single_edge_closed_form() {
        let g = WeightedGraph::new(2, vec![(0, 1, 2.0)]).unwrap();
        let x = SignalMatrix::from_dense_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_abs_diff_eq!(smoothness(&x, &g.laplacian()).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn smoothness_rejects_dimension_mismatch() {
        let g = WeightedGraph::edgeless(3);
        let x = SignalMatrix::from_dense_rows(&[vec![1.0], vec![2.0]]);
        assert!(matches!(
            smoothness(&x, &g.laplacian()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn objective_edgeless_two_nodes_by_hand() {
        // Θ = I, log det = 0, trace = 1, l1 = 2 → 0 - 1 - 0.1*2 = -1.2.
        let g = WeightedGraph::edgeless(2);
        let x = SignalMatrix::from_dense_rows(&[vec![1.0], vec![0.0]]);
        let p = ObjectiveParams::new(0.1, 1.0).unwrap();
        assert_abs_diff_eq!(objective(&g, &x, &p).unwrap(), -1.2, epsilon = 1e-12);
    }

    #[test]
    fn objective_all_terms_vanish() {
        let g = WeightedGraph::edgeless(3);
        let x = SignalMatrix::from_dense_rows(&[vec![0.0], vec![0.0], vec![0.0]]);
        let p = ObjectiveParams::new(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(objective(&g, &x, &p).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_node_log_det_closed_form() {
        // det Θ = a² + 2aw with a = 1/σ².
        for &(w, sigma) in &[(0.5, 1.0), (2.0, 0.7), (0.03, 3.0)] {
            let g = WeightedGraph::new(2, vec![(0, 1, w)]).unwrap();
            let p = ObjectiveParams::new(0.0, sigma).unwrap();
            let a = 1.0 / (sigma * sigma);
            let expect = (a * a + 2.0 * a * w).ln();
            let factor = PrecisionFactor::new(&g, &p).unwrap();
            assert_abs_diff_eq!(factor.log_det(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn two_node_effective_resistance_closed_form() {
        for &(w, sigma) in &[(0.5, 1.0), (2.0, 0.7), (0.03, 3.0)] {
            let g = WeightedGraph::new(2, vec![(0, 1, w)]).unwrap();
            let p = ObjectiveParams::new(0.0, sigma).unwrap();
            let a = 1.0 / (sigma * sigma);
            let r = effective_resistance(&g, &p, 0, 1).unwrap();
            assert_abs_diff_eq!(r, 2.0 / (a + 2.0 * w), epsilon = 1e-12);
            let r_swapped = effective_resistance(&g, &p, 1, 0).unwrap();
            assert_abs_diff_eq!(r, r_swapped, epsilon = 1e-15);
        }
    }

    #[test]
    fn resistance_of_identical_endpoints_is_zero() {
        let g = unit_triangle();
        let p = ObjectiveParams::new(0.0, 1.0).unwrap();
        assert_eq!(effective_resistance(&g, &p, 1, 1).unwrap(), 0.0);
        assert!(matches!(
            effective_resistance(&g, &p, 0, 9),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = WeightedGraph::new(
            5,
            vec![(0, 1, 0.25), (3, 4, 1.0), (1, 4, 0.0625e-3)],
        )
        .unwrap();
        let mut buf = Vec::new();
        g.save_edge_list(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("nodes 5 edges 3\n"));
        let back = WeightedGraph::load_edge_list(&buf[..]).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn edge_list_rejects_garbage() {
        assert!(WeightedGraph::load_edge_list("".as_bytes()).is_err());
        assert!(WeightedGraph::load_edge_list("nodes x edges 0\n".as_bytes()).is_err());
        assert!(
            WeightedGraph::load_edge_list("nodes 2 edges 1\n0 1\n".as_bytes()).is_err()
        );
        assert!(
            WeightedGraph::load_edge_list("nodes 2 edges 2\n0 1 1.0\n".as_bytes()).is_err()
        );
    }

    #[test]
    fn signal_matrix_distances() {
        let x = SignalMatrix::from_dense_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 2.0]]);
        assert_abs_diff_eq!(x.dot(0, 1), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.dist2(0, 1), 1.0 + 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.frob2(), 5.0 + 13.0, epsilon = 1e-12);
        assert_eq!(x.covariance_divisor(), 3);
        let x = x.with_covariance_divisor(7).unwrap();
        assert_eq!(x.covariance_divisor(), 7);
    }
}
