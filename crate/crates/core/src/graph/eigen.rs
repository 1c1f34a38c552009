//! Smallest eigenpairs of the precision matrix `Θ = L + I/σ²`.
//!
//! Shift-invert Lanczos: the Krylov recurrence runs on `Θ⁻¹` (applied via
//! the sparse factorization), whose largest eigenvalues are the smallest
//! of `Θ` and converge first. Full reorthogonalization keeps the basis
//! clean; on breakdown (an invariant subspace was exhausted) the basis is
//! extended with a fresh orthogonalized vector, which is sound because an
//! invariant subspace of a symmetric operator has an invariant complement.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{ObjectiveParams, PrecisionFactor, PrecisionView, WeightedGraph};

/// Fixed start-vector seed so repeated runs produce identical output.
const LANCZOS_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

const BREAKDOWN_EPS: f64 = 1e-12;

/// The `r` smallest eigenpairs of `Θ`, eigenvalues ascending.
///
/// Each returned vector is unit-length with a deterministic sign, and its
/// residual satisfies `‖Θ v - λ v‖ ≤ tol`.
pub fn smallest_eigenpairs(
    g: &WeightedGraph,
    params: &ObjectiveParams,
    r: usize,
    tol: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = g.node_count();
    if r == 0 || r > n {
        return Err(Error::InvalidConfig(format!(
            "requested {r} eigenpairs of a {n}-node graph"
        )));
    }
    let factor = PrecisionFactor::new(g, params)?;
    let view = PrecisionView::new(g, params);

    let mut subspace = usize::min(n, usize::max(2 * r + 16, 32));
    for _attempt in 0..8 {
        let run = lanczos(&factor, n, subspace)?;
        if let Some(pairs) = extract_ritz(&run, &view, r, tol) {
            return Ok(pairs);
        }
        if subspace == n {
            break;
        }
        subspace = usize::min(n, subspace * 2);
    }
    Err(Error::EigensolverNoConvergence)
}

struct LanczosRun {
    alphas: Vec<f64>,
    betas: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

fn lanczos(factor: &PrecisionFactor, n: usize, steps: usize) -> Result<LanczosRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(LANCZOS_SEED);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps.saturating_sub(1));

    let mut q = random_unit(&mut rng, n);
    let mut beta_prev = 0.0;

    while basis.len() < steps {
        let mut w = factor.solve(&q);
        let alpha = dot(&w, &q);
        axpy(&mut w, -alpha, &q);
        if let Some(prev) = basis.last() {
            if beta_prev != 0.0 {
                axpy(&mut w, -beta_prev, prev);
            }
        }
        basis.push(q.clone());
        alphas.push(alpha);
        // Full reorthogonalization, two passes.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        if basis.len() == steps {
            break;
        }
        let beta = norm(&w);
        if beta > BREAKDOWN_EPS {
            scale(&mut w, 1.0 / beta);
            q = w;
            beta_prev = beta;
            betas.push(beta);
        } else {
            // Invariant subspace exhausted: continue in its complement.
            let fresh = fresh_direction(&mut rng, n, &basis)?;
            q = fresh;
            beta_prev = 0.0;
            betas.push(0.0);
        }
    }

    Ok(LanczosRun {
        alphas,
        betas,
        basis,
    })
}

fn extract_ritz(
    run: &LanczosRun,
    view: &PrecisionView<'_>,
    r: usize,
    tol: f64,
) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = run.alphas.len();
    if k < r {
        return None;
    }
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            run.alphas[i]
        } else if j + 1 == i {
            run.betas[j]
        } else if i + 1 == j {
            run.betas[i]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);

    // Largest eigenvalues of Θ⁻¹ = smallest of Θ.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let n = run.basis[0].len();
    let mut lambdas = Vec::with_capacity(r);
    let mut vectors = Vec::with_capacity(r);
    for &idx in order.iter().take(r) {
        let mu = eig.eigenvalues[idx];
        if !(mu > 0.0) {
            return None;
        }
        let y = eig.eigenvectors.column(idx);
        let mut v = vec![0.0; n];
        for (b, &coeff) in run.basis.iter().zip(y.iter()) {
            axpy(&mut v, coeff, b);
        }
        let nv = norm(&v);
        if nv == 0.0 {
            return None;
        }
        scale(&mut v, 1.0 / nv);
        fix_sign(&mut v);

        let lambda = 1.0 / mu;
        let theta_v = view.matvec(&v);
        let mut resid2 = 0.0;
        for (tv, vi) in theta_v.iter().zip(&v) {
            let d = tv - lambda * vi;
            resid2 += d * d;
        }
        if resid2.sqrt() > tol {
            return None;
        }
        lambdas.push(lambda);
        vectors.push(v);
    }

    // Ascending in λ.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| {
        lambdas[a]
            .partial_cmp(&lambdas[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lambdas_sorted: Vec<f64> = order.iter().map(|&i| lambdas[i]).collect();
    let vectors_sorted: Vec<Vec<f64>> = order.iter().map(|&i| vectors[i].clone()).collect();
    Some((lambdas_sorted, vectors_sorted))
}

fn fresh_direction(
    rng: &mut ChaCha8Rng,
    n: usize,
    basis: &[Vec<f64>],
) -> Result<Vec<f64>> {
    for _ in 0..16 {
        let mut w = random_unit(rng, n);
        for _ in 0..2 {
            for b in basis {
                let c = dot(&w, b);
                axpy(&mut w, -c, b);
            }
        }
        let nw = norm(&w);
        if nw > 1e-8 {
            scale(&mut w, 1.0 / nw);
            return Ok(w);
        }
    }
    Err(Error::EigensolverNoConvergence)
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let nv = norm(&v);
        if nv > 1e-8 {
            let mut v = v;
            scale(&mut v, 1.0 / nv);
            return v;
        }
    }
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn scale(v: &mut [f64], s: f64) {
    for x in v.iter_mut() {
        *x *= s;
    }
}
