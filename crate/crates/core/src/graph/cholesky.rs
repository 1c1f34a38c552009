//! Symmetric positive-definite factorization of the precision matrix
//! `Θ = L + I/σ²`, used for log-determinants and linear solves.
//!
//! Graphs below [`DENSE_LIMIT`] nodes go through a dense LDLᵀ; larger ones
//! through a sparse up-looking LDLᵀ on a reverse Cuthill-McKee reordering
//! of the nodes. Both paths are exact (no dropping); `Θ` is strictly
//! positive definite for any σ > 0, so failures surface only on numerical
//! breakdown.

use crate::error::{Error, Result};
use crate::graph::{ObjectiveParams, PrecisionView, WeightedGraph};

/// Node count below which the dense path is used.
const DENSE_LIMIT: usize = 64;

const NONE: usize = usize::MAX;

/// Factored form of `Θ = L_graph + I/σ²` for one graph.
///
/// Holds `Θ = P L D Lᵀ Pᵀ` with unit lower-triangular `L` and positive
/// diagonal `D`; exposes the log-determinant and linear solves against the
/// original (unpermuted) node order.
#[derive(Debug, Clone)]
pub struct PrecisionFactor {
    n: usize,
    log_det: f64,
    kind: FactorKind,
}

#[derive(Debug, Clone)]
enum FactorKind {
    Dense(DenseLdl),
    Sparse(SparseLdl),
}

impl PrecisionFactor {
    pub fn new(g: &WeightedGraph, params: &ObjectiveParams) -> Result<Self> {
        if g.node_count() < DENSE_LIMIT {
            Self::new_dense(g, params)
        } else {
            Self::new_sparse(g, params)
        }
    }

    fn new_dense(g: &WeightedGraph, params: &ObjectiveParams) -> Result<Self> {
        let theta = PrecisionView::new(g, params).to_dense();
        let ldl = DenseLdl::factor(g.node_count(), &theta)?;
        Ok(Self {
            n: g.node_count(),
            log_det: ldl.diag.iter().map(|d| d.ln()).sum(),
            kind: FactorKind::Dense(ldl),
        })
    }

    fn new_sparse(g: &WeightedGraph, params: &ObjectiveParams) -> Result<Self> {
        let ldl = SparseLdl::factor(g, params)?;
        Ok(Self {
            n: g.node_count(),
            log_det: ldl.diag.iter().map(|d| d.ln()).sum(),
            kind: FactorKind::Sparse(ldl),
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// `log det Θ`.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Solve `Θ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n, "rhs length must match node count");
        match &self.kind {
            FactorKind::Dense(ldl) => ldl.solve(b),
            FactorKind::Sparse(ldl) => ldl.solve(b),
        }
    }

    /// `(e_i - e_j)ᵀ Θ⁻¹ (e_i - e_j)` for a node pair.
    pub fn pair_resistance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let mut b = vec![0.0; self.n];
        b[i] = 1.0;
        b[j] = -1.0;
        let x = self.solve(&b);
        x[i] - x[j]
    }
}

#[derive(Debug, Clone)]
struct DenseLdl {
    n: usize,
    // Strict lower triangle of L, row-major; unit diagonal implicit.
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl DenseLdl {
    fn factor(n: usize, a: &[f64]) -> Result<Self> {
        let mut lower = vec![0.0; n * n];
        let mut diag = vec![0.0; n];
        for j in 0..n {
            let mut dj = a[j * n + j];
            for k in 0..j {
                dj -= lower[j * n + k] * lower[j * n + k] * diag[k];
            }
            if !(dj > 0.0) || !dj.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            diag[j] = dj;
            for i in (j + 1)..n {
                let mut v = a[i * n + j];
                for k in 0..j {
                    v -= lower[i * n + k] * lower[j * n + k] * diag[k];
                }
                lower[i * n + j] = v / dj;
            }
        }
        Ok(Self { n, lower, diag })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lower[i * n + k] * x[k];
            }
        }
        for i in 0..n {
            x[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.lower[k * n + i] * x[k];
            }
        }
        x
    }
}

/// Up-looking sparse LDLᵀ over an RCM permutation.
#[derive(Debug, Clone)]
struct SparseLdl {
    n: usize,
    /// perm[new] = old node index.
    perm: Vec<usize>,
    // Column-compressed strict lower triangle of L.
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseLdl {
    fn factor(g: &WeightedGraph, params: &ObjectiveParams) -> Result<Self> {
        let n = g.node_count();
        let perm = rcm_order(g);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Upper triangle of the permuted Θ in column-compressed form
        // (diagonal included).
        let shift = PrecisionView::new(g, params).shift();
        let mut counts = vec![1usize; n]; // diagonal entry per column
        for e in g.edges() {
            let (a, b) = (iperm[e.i], iperm[e.j]);
            counts[a.max(b)] += 1;
        }
        let mut a_ptr = vec![0usize; n + 1];
        for j in 0..n {
            a_ptr[j + 1] = a_ptr[j] + counts[j];
        }
        let nnz = a_ptr[n];
        let mut a_row = vec![0usize; nnz];
        let mut a_val = vec![0.0f64; nnz];
        let mut cursor = a_ptr.clone();
        for (new, &old) in perm.iter().enumerate() {
            a_row[cursor[new]] = new;
            a_val[cursor[new]] = g.degree(old) + shift;
            cursor[new] += 1;
        }
        for e in g.edges() {
            let (a, b) = (iperm[e.i], iperm[e.j]);
            let (r, c) = (a.min(b), a.max(b));
            a_row[cursor[c]] = r;
            a_val[cursor[c]] = -e.weight;
            cursor[c] += 1;
        }
        for j in 0..n {
            let lo = a_ptr[j];
            let hi = a_ptr[j + 1];
            let mut entries: Vec<(usize, f64)> = a_row[lo..hi]
                .iter()
                .copied()
                .zip(a_val[lo..hi].iter().copied())
                .collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (offset, (r, v)) in entries.into_iter().enumerate() {
                a_row[lo + offset] = r;
                a_val[lo + offset] = v;
            }
        }

        // Symbolic pass: elimination tree and per-column fill counts.
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut l_count = vec![0usize; n];
        for j in 0..n {
            flag[j] = j;
            for p in a_ptr[j]..a_ptr[j + 1] {
                let mut k = a_row[p];
                while flag[k] != j {
                    if parent[k] == NONE {
                        parent[k] = j;
                    }
                    l_count[k] += 1;
                    flag[k] = j;
                    k = parent[k];
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for j in 0..n {
            col_ptr[j + 1] = col_ptr[j] + l_count[j];
        }

        // Numeric pass.
        let mut rows = vec![0usize; col_ptr[n]];
        let mut vals = vec![0.0f64; col_ptr[n]];
        let mut diag = vec![0.0f64; n];
        let mut filled = vec![0usize; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut path = vec![0usize; n];
        let mut flag = vec![NONE; n];

        for j in 0..n {
            flag[j] = j;
            let mut top = n;
            for p in a_ptr[j]..a_ptr[j + 1] {
                let i = a_row[p];
                y[i] += a_val[p];
                let mut len = 0usize;
                let mut k = i;
                while flag[k] != j {
                    path[len] = k;
                    len += 1;
                    flag[k] = j;
                    k = parent[k];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = path[len];
                }
            }
            let mut dj = y[j];
            y[j] = 0.0;
            for &k in &pattern[top..n] {
                let yk = y[k];
                y[k] = 0.0;
                for p in col_ptr[k]..(col_ptr[k] + filled[k]) {
                    y[rows[p]] -= vals[p] * yk;
                }
                let ljk = yk / diag[k];
                dj -= ljk * yk;
                let slot = col_ptr[k] + filled[k];
                rows[slot] = j;
                vals[slot] = ljk;
                filled[k] += 1;
            }
            if !(dj > 0.0) || !dj.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            diag[j] = dj;
        }

        Ok(Self {
            n,
            perm,
            col_ptr,
            rows,
            vals,
            diag,
        })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for new in 0..n {
            x[new] = b[self.perm[new]];
        }
        for j in 0..n {
            let xj = x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                x[self.rows[p]] -= self.vals[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.diag[j];
        }
        for j in (0..n).rev() {
            let mut xj = x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                xj -= self.vals[p] * x[self.rows[p]];
            }
            x[j] = xj;
        }
        let mut out = vec![0.0; n];
        for new in 0..n {
            out[self.perm[new]] = x[new];
        }
        out
    }
}

/// Reverse Cuthill-McKee ordering; returns `perm` with `perm[new] = old`.
///
/// Ties everywhere break on the smaller node index, so the ordering is a
/// pure function of the graph structure.
fn rcm_order(g: &WeightedGraph) -> Vec<usize> {
    let n = g.node_count();
    let degree = |v: usize| g.neighbors(v).count();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);

    let component_seed = |visited: &[bool]| -> Option<usize> {
        (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree(v), v))
    };

    while let Some(seed) = component_seed(&visited) {
        let start = pseudo_peripheral(g, seed);
        let mut queue = std::collections::VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = g
                .neighbors(v)
                .map(|(u, _)| u)
                .filter(|&u| !visited[u])
                .collect();
            nbrs.sort_unstable_by_key(|&u| (degree(u), u));
            for u in nbrs {
                if !visited[u] {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(g: &WeightedGraph, seed: usize) -> usize {
    let mut u = seed;
    let mut ecc = 0usize;
    for _ in 0..4 {
        let (levels, depth) = bfs_levels(g, u);
        let candidate = (0..g.node_count())
            .filter(|&v| levels[v] == depth)
            .min_by_key(|&v| (g.neighbors(v).count(), v));
        let Some(v) = candidate else { break };
        if depth > ecc {
            ecc = depth;
            u = v;
        } else {
            break;
        }
    }
    u
}

fn bfs_levels(g: &WeightedGraph, start: usize) -> (Vec<usize>, usize) {
    let n = g.node_count();
    let mut level = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    level[start] = 0;
    queue.push_back(start);
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        depth = depth.max(level[v]);
        for (u, _) in g.neighbors(v) {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                queue.push_back(u);
            }
        }
    }
    (level, depth)
}
