//! Lowest eigenpairs of a sparse Hermitian matrix by restarted block
//! Krylov iteration with locking.
//!
//! Each cycle grows an orthonormal block Krylov basis (every new vector is
//! Gram–Schmidt orthogonalized twice against the locked vectors and the
//! whole basis), solves the Rayleigh–Ritz problem, locks the Ritz pairs
//! whose residual is below tolerance and restarts from the lowest
//! unconverged Ritz vectors. The block size bounds how many copies of a
//! degenerate eigenvalue one cycle can resolve; locking lets later cycles
//! pick up the rest.

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dense::eigh;
use crate::error::{Error, Result};
use crate::linalg::{axpy, inner, norm, DenseMatrix, ZERO};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Number of lowest eigenvalues wanted.
    pub k: usize,
    pub block_size: usize,
    /// Basis size per cycle before restarting.
    pub max_basis: usize,
    pub max_restarts: usize,
    /// Residual tolerance relative to `‖H‖₂`.
    pub tol: f64,
    pub seed: u64,
}

impl KrylovOptions {
    pub fn lowest(k: usize) -> Self {
        Self {
            k,
            block_size: 4,
            max_basis: 200,
            max_restarts: 1000,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovResult {
    /// The `k` lowest eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Residual norms `‖Hx − θx‖` of the returned pairs.
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub matvecs: usize,
    pub norm_estimate: f64,
}

fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

/// Orthogonalizes `x` against each set in `against` (two passes). Returns
/// the norm before and after.
fn orthogonalize(x: &mut [C64], against: &[&[Vec<C64>]]) -> (f64, f64) {
    let before = norm(x);
    for _ in 0..2 {
        for set in against {
            for q in set.iter() {
                let c = inner(q, x);
                axpy(-c, q, x);
            }
        }
    }
    (before, norm(x))
}

/// Largest-magnitude eigenvalue estimate from a short single-vector Lanczos
/// run.
pub fn estimate_norm(h: &CscMatrix, steps: usize, seed: u64) -> Result<f64> {
    let dim = h.rows();
    if dim == 0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut images: Vec<Vec<C64>> = Vec::new();
    let mut x = random_vector(dim, &mut rng);
    for _ in 0..steps.min(dim) {
        let (_, after) = orthogonalize(&mut x, &[&basis]);
        if after < 1e-12 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= after);
        let hx = h.matvec(&x);
        basis.push(std::mem::replace(&mut x, hx.clone()));
        images.push(hx);
    }
    let t = rayleigh_matrix(&basis, &images);
    let vals = eigh(&t, false)?.values;
    Ok(vals.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

fn rayleigh_matrix(basis: &[Vec<C64>], images: &[Vec<C64>]) -> DenseMatrix {
    let s = basis.len();
    let mut t = DenseMatrix::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let v = inner(&basis[i], &images[j]);
            let w = inner(&basis[j], &images[i]).conj();
            let avg = (v + w) * 0.5;
            t[(i, j)] = avg;
            t[(j, i)] = avg.conj();
        }
        t[(i, i)] = C64::new(t[(i, i)].re, 0.0);
    }
    t
}

fn combine(vectors: &[Vec<C64>], coeffs: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; vectors[0].len()];
    for (v, &c) in vectors.iter().zip(coeffs) {
        axpy(c, v, &mut out);
    }
    out
}

/// The `opts.k` lowest eigenvalues of the Hermitian matrix `h`.
pub fn lowest_eigenvalues(h: &CscMatrix, opts: &KrylovOptions) -> Result<KrylovResult> {
    let dim = h.rows();
    let k = opts.k.min(dim);
    let block = opts.block_size.max(1);
    let norm_estimate = estimate_norm(h, 40, opts.seed ^ 0x9e37_79b9)?;
    let tol = opts.tol * norm_estimate.max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut matvecs = 0usize;

    let mut locked: Vec<Vec<C64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut locked_res: Vec<f64> = Vec::new();
    let mut starts: Vec<Vec<C64>> = (0..block).map(|_| random_vector(dim, &mut rng)).collect();

    for restart in 0..opts.max_restarts {
        let room = dim - locked.len();
        if k == 0 || room == 0 {
            return Ok(finish(
                locked_vals,
                locked_res,
                k,
                restart,
                matvecs,
                norm_estimate,
            ));
        }
        let cap = opts.max_basis.max(block).min(room);
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(cap);
        let mut images: Vec<Vec<C64>> = Vec::with_capacity(cap);
        let mut sources = std::mem::take(&mut starts);
        while basis.len() < cap {
            let mut fresh: Vec<Vec<C64>> = Vec::new();
            for mut x in sources.drain(..) {
                if basis.len() + fresh.len() >= cap {
                    break;
                }
                let (before, after) = orthogonalize(&mut x, &[&locked, &basis, &fresh]);
                if after <= 1e-10 * before || after == 0.0 {
                    continue;
                }
                x.iter_mut().for_each(|v| *v /= after);
                fresh.push(x);
            }
            if fresh.is_empty() {
                // Invariant subspace: top up with random directions if room remains.
                if basis.len() < cap
                    && basis.len() + locked.len() < dim
                    && sources.is_empty()
                    && basis.is_empty()
                {
                    sources = (0..block).map(|_| random_vector(dim, &mut rng)).collect();
                    continue;
                }
                break;
            }
            for x in &fresh {
                let hx = h.matvec(x);
                matvecs += 1;
                sources.push(hx.clone());
                images.push(hx);
            }
            basis.extend(fresh);
        }
        if basis.is_empty() {
            break;
        }

        let t = rayleigh_matrix(&basis, &images);
        let eig = eigh(&t, true)?;
        let y = eig.vectors.expect("requested vectors");
        let needed = (k.saturating_sub(locked.len()) + block).min(basis.len());
        let full_space = basis.len() == room;

        let mut unconverged: Vec<(f64, Vec<C64>)> = Vec::new();
        let mut newly_locked = 0;
        for i in 0..needed {
            let coeffs = y.column(i);
            let theta = eig.values[i];
            let x = combine(&basis, &coeffs);
            let mut r = combine(&images, &coeffs);
            axpy(C64::new(-theta, 0.0), &x, &mut r);
            let res = norm(&r);
            if res <= tol || full_space {
                let mut x = x;
                let (_, after) = orthogonalize(&mut x, &[&locked]);
                if after > 0.5 {
                    x.iter_mut().for_each(|v| *v /= after);
                    locked.push(x);
                    locked_vals.push(theta);
                    locked_res.push(res);
                    newly_locked += 1;
                }
            } else {
                unconverged.push((theta, x));
            }
        }

        if locked.len() >= k {
            let mut sorted = locked_vals.clone();
            sorted.sort_by(f64::total_cmp);
            let kth = sorted[k - 1];
            let lowest_open = unconverged.first().map(|(theta, _)| *theta);
            if full_space
                || lowest_open.map_or(newly_locked < needed || needed == basis.len(), |th| {
                    th >= kth - tol
                })
            {
                return Ok(finish(
                    locked_vals,
                    locked_res,
                    k,
                    restart + 1,
                    matvecs,
                    norm_estimate,
                ));
            }
        }

        starts = unconverged
            .into_iter()
            .take(block)
            .map(|(_, x)| x)
            .collect();
        while starts.len() < block {
            starts.push(random_vector(dim, &mut rng));
        }
    }
    Err(Error::NoConvergence {
        method: "block Krylov",
        iterations: opts.max_restarts,
    })
}

fn finish(
    vals: Vec<f64>,
    res: Vec<f64>,
    k: usize,
    restarts: usize,
    matvecs: usize,
    norm_estimate: f64,
) -> KrylovResult {
    let mut pairs: Vec<(f64, f64)> = vals.into_iter().zip(res).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(k);
    KrylovResult {
        values: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.1).collect(),
        restarts,
        matvecs,
        norm_estimate,
    }
}
