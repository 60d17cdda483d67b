//! Lowest eigenpairs of a real symmetric operator by thick-restart Lanczos.
//!
//! Each cycle extends a basis with full (two-pass) Gram-Schmidt
//! reorthogonalization against the basis and all locked vectors, projects the
//! operator onto it, and locks the lowest Ritz pairs whose residual is below
//! the tolerance. The lowest unconverged Ritz vectors and the residual
//! direction seed the next cycle. After `k` pairs are locked, one more cycle
//! from a fresh random start checks for missed degenerate partners.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ising::LinearOp;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Residual `||H v - theta v||` at which a Ritz pair is accepted.
    pub tolerance: f64,
    /// Krylov basis size per restart.
    pub krylov: usize,
    pub max_restarts: usize,
    /// Run a final pass from a fresh start to catch missed degenerate partners.
    pub verify: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, krylov: 48, max_restarts: 400, verify: true }
    }
}

/// Dot product with eight independent accumulators so the loop vectorizes.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    acc.iter().sum::<f64>() + tail
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn scale(v: &mut [f64], alpha: f64) {
    v.iter_mut().for_each(|x| *x *= alpha);
}

/// Remove components along `basis`, repeating the pass once when it cancelled
/// most of `w`; returns the accumulated coefficients.
fn orthogonalize<'a>(w: &mut [f64], basis: impl Iterator<Item = &'a Vec<f64>> + Clone) -> Vec<f64> {
    let before = norm(w);
    let mut coeffs = project_out(w, basis.clone());
    if norm(w) < 0.7071 * before {
        for (c, extra) in coeffs.iter_mut().zip(project_out(w, basis)) {
            *c += extra;
        }
    }
    coeffs
}

const BLOCK: usize = 2048;

/// One classical Gram-Schmidt pass, processed in cache-sized blocks of `w`.
fn project_out<'a>(w: &mut [f64], basis: impl Iterator<Item = &'a Vec<f64>> + Clone) -> Vec<f64> {
    let vecs: Vec<&Vec<f64>> = basis.collect();
    let mut coeffs = vec![0.0; vecs.len()];
    for start in (0..w.len()).step_by(BLOCK) {
        let end = (start + BLOCK).min(w.len());
        let wb = &w[start..end];
        for (c, q) in coeffs.iter_mut().zip(&vecs) {
            *c += dot(&q[start..end], wb);
        }
    }
    for start in (0..w.len()).step_by(BLOCK) {
        let end = (start + BLOCK).min(w.len());
        let wb = &mut w[start..end];
        for (&c, q) in coeffs.iter().zip(&vecs) {
            axpy(-c, &q[start..end], wb);
        }
    }
    coeffs
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect()
}

/// Residual norm `||H v - lambda v||`.
pub(crate) fn residual(op: &LinearOp, lambda: f64, v: &[f64], work: &mut [f64]) -> f64 {
    op.apply_real(v, work);
    work.iter().zip(v).map(|(hv, x)| (hv - lambda * x).powi(2)).sum::<f64>().sqrt()
}

/// Normalized columns of `basis * coeffs`, streaming the basis once.
fn combine(basis: &[Vec<f64>], coeffs: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let dim = basis.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; dim]; coeffs.ncols()];
    for start in (0..dim).step_by(BLOCK) {
        let end = (start + BLOCK).min(dim);
        for (i, q) in basis.iter().enumerate() {
            let qb = &q[start..end];
            for (c, x) in out.iter_mut().enumerate() {
                axpy(coeffs[(i, c)], qb, &mut x[start..end]);
            }
        }
    }
    for x in &mut out {
        let nx = norm(x);
        scale(x, 1.0 / nx);
    }
    out
}

fn lowest_locked(vals: &[f64], vecs: &[Vec<f64>], k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    idx.truncate(k);
    (idx.iter().map(|&i| vals[i]).collect(), idx.iter().map(|&i| vecs[i].clone()).collect())
}

/// Lowest `k` eigenpairs, ascending. `guesses` seed the first Krylov space.
pub fn lowest_eigenpairs(
    op: &LinearOp,
    k: usize,
    guesses: &[Vec<f64>],
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dim = op.dim();
    if k == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if k > dim {
        return Err(Error::Contract(format!("requested {k} eigenpairs of a {dim}-dimensional operator")));
    }
    let (lo, hi) = op.spectral_bounds();
    let breakdown = 1e-13 * lo.abs().max(hi.abs()).max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2053);
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut work = vec![0.0; dim];
    let mut worst = f64::INFINITY;

    let mut start = random_vector(&mut rng, dim);
    let usable: Vec<&Vec<f64>> = guesses.iter().filter(|g| g.len() == dim).collect();
    if !usable.is_empty() {
        let s0 = 1e-3 / norm(&start);
        scale(&mut start, s0);
        for g in usable {
            let ng = norm(g);
            if ng > 0.0 {
                axpy(1.0 / ng, g, &mut start);
            }
        }
    }
    // Ritz pairs carried over from the previous restart.
    let mut kept: Vec<(f64, Vec<f64>)> = Vec::new();

    for _ in 0..opts.max_restarts {
        if locked.len() == dim {
            return Ok(lowest_locked(&locked_vals, &locked, k));
        }
        let m = opts.krylov.max(k + 2).min(dim - locked.len());
        kept.truncate(m.saturating_sub(1));
        let p = kept.len();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut proj = DMatrix::<f64>::zeros(m, m);
        for (i, (theta, v)) in kept.drain(..).enumerate() {
            proj[(i, i)] = theta;
            basis.push(v);
        }
        orthogonalize(&mut start, locked.iter().chain(basis.iter()));
        let mut nrm = norm(&start);
        if nrm < 1e-8 {
            start = random_vector(&mut rng, dim);
            orthogonalize(&mut start, locked.iter().chain(basis.iter()));
            nrm = norm(&start);
        }
        scale(&mut start, 1.0 / nrm);
        basis.push(std::mem::take(&mut start));

        let mut last_beta = 0.0;
        let mut size = p;
        for j in p..m {
            op.apply_real(&basis[j], &mut work);
            orthogonalize(&mut work, locked.iter());
            let coeffs = orthogonalize(&mut work, basis.iter());
            for (i, &c) in coeffs.iter().enumerate() {
                proj[(i, j)] = c;
                proj[(j, i)] = c;
            }
            size = j + 1;
            let beta = norm(&work);
            if beta < breakdown {
                last_beta = 0.0;
                break;
            }
            last_beta = beta;
            let mut next = work.clone();
            scale(&mut next, 1.0 / beta);
            if j + 1 == m {
                start = next;
                break;
            }
            basis.push(next);
        }
        if last_beta == 0.0 {
            start = random_vector(&mut rng, dim);
        }
        let eig = proj.view((0, 0), (size, size)).into_owned().symmetric_eigen();
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        let ritz_vector = |col: usize| {
            let mut x = vec![0.0; dim];
            for (i, q) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(i, col)], q, &mut x);
            }
            let nx = norm(&x);
            scale(&mut x, 1.0 / nx);
            x
        };

        // Once k pairs are locked, a pass from a fresh start checks that no
        // lower eigenvalue (typically a missed degenerate copy) remains.
        let verifying = locked.len() >= k;
        if verifying && !opts.verify {
            return Ok(lowest_locked(&locked_vals, &locked, k));
        }
        if verifying {
            let mut sorted = locked_vals.clone();
            sorted.sort_by(f64::total_cmp);
            let threshold = sorted[k - 1];
            let slack = 100.0 * opts.tolerance * threshold.abs().max(1.0);
            if eig.eigenvalues[order[0]] >= threshold - slack {
                return Ok(lowest_locked(&locked_vals, &locked, k));
            }
        }
        let wanted = if verifying { 1 } else { k - locked.len() };
        let mut newly = 0;
        let mut unconverged: Option<f64> = None;
        for &col in order.iter().take(wanted) {
            let theta = eig.eigenvalues[col];
            let estimate = (last_beta * eig.eigenvectors[(size - 1, col)]).abs();
            if estimate >= opts.tolerance {
                unconverged = Some(estimate);
                break;
            }
            let x = ritz_vector(col);
            let r = residual(op, theta, &x, &mut work);
            if r >= opts.tolerance * 5.0 {
                unconverged = Some(r);
                break;
            }
            locked_vals.push(theta);
            locked.push(x);
            newly += 1;
        }
        if let Some(r) = unconverged {
            worst = r;
        }
        if unconverged.is_none() && locked.len() >= k {
            start = random_vector(&mut rng, dim);
            continue;
        }
        let remaining = wanted - newly;
        let next_m = opts.krylov.max(k + 2).min(dim - locked.len());
        let keep = (m / 2)
            .max(remaining + 2)
            .min(size - newly)
            .min(next_m.saturating_sub(2));
        let cols = &order[newly..newly + keep];
        let coeffs = DMatrix::from_fn(size, keep, |i, c| eig.eigenvectors[(i, cols[c])]);
        kept = cols.iter().map(|&col| eig.eigenvalues[col]).zip(combine(&basis, &coeffs)).collect();
    }
    Err(Error::NotConverged { worst_residual: worst })
}
