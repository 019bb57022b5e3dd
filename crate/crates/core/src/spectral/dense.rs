//! Dense Hermitian eigensolver: Householder reduction to tridiagonal form
//! followed by implicit QL iteration with Wilkinson-style shifts.
//!
//! Real symmetric input takes a separate `f64` path, which is about four
//! times cheaper than the complex one.

use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, ZERO};
use crate::sparse::CscMatrix;

const MAX_QL_ITERATIONS: usize = 60;

pub(crate) trait Scalar:
    Copy
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn re(self) -> f64;
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        ZERO
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn conj(self) -> Self {
        C64::conj(&self)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

struct Tridiagonal<T> {
    diag: Vec<f64>,
    /// `sub[k]` is the entry at `(k + 1, k)`.
    sub: Vec<T>,
    /// Accumulated reflections `Q` with `A = Q T Q†` (row-major).
    q: Option<Vec<T>>,
}

/// `Σ a_i b_i` with independent partial sums so the loop can vectorize.
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (a4, a_rest) = a.split_at(a.len() / 4 * 4);
    let (b4, b_rest) = b.split_at(a4.len());
    for (x, y) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in a_rest.iter().zip(b_rest) {
        total += *x * *y;
    }
    total
}

type Reflector<T> = (Vec<T>, f64);

/// Householder reflector `I − τ v v†` mapping `x` onto its first axis.
/// Returns the resulting subdiagonal entry, and no reflector when `x` is
/// already reduced.
fn reflector<T: Scalar>(mut x: Vec<T>) -> (T, Option<Reflector<T>>) {
    let tail = x[1..].iter().map(|v| v.abs2()).sum::<f64>();
    if tail == 0.0 {
        return (x[0], None);
    }
    let x0 = x[0];
    let x0_abs = x0.abs2().sqrt();
    let alpha = (x0.abs2() + tail).sqrt();
    let phase = if x0_abs == 0.0 {
        T::one()
    } else {
        x0.scale(1.0 / x0_abs)
    };
    x[0] += phase.scale(alpha);
    let tau = 1.0 / (alpha * (alpha + x0_abs));
    (phase.scale(-alpha), Some((x, tau)))
}

/// One pass over the lower triangle of the block `start..n`: applies the
/// rank-2 update `B ← B − v w† − w v†` if given, and returns `B' u` for the
/// block `start + 1..n` if `u` is given, reading the updated entries.
fn sweep<T: Scalar>(
    a: &mut [T],
    n: usize,
    start: usize,
    update: Option<(&[T], &[T])>,
    next: Option<&[T]>,
) -> Vec<T> {
    let s1 = start + 1;
    let mut p = vec![T::zero(); if next.is_some() { n - s1 } else { 0 }];
    for i in start..n {
        let row = &mut a[i * n + start..=i * n + i];
        if let Some((v, w)) = update {
            let (vi, wi) = (v[i - start], w[i - start]);
            for ((b, vj), wj) in row.iter_mut().zip(v).zip(w) {
                *b -= vi * wj.conj() + wi * vj.conj();
            }
        }
        if let (Some(u), true) = (next, i >= s1) {
            let ii = i - s1;
            let ui = u[ii];
            let lower = &row[1..i - start];
            p[ii] += dot(lower, &u[..ii]) + row[i - start] * ui;
            for (pj, b) in p[..ii].iter_mut().zip(lower) {
                *pj += b.conj() * ui;
            }
        }
    }
    p
}

/// Reduces the Hermitian matrix `a` (row-major `n × n`; only the lower
/// triangle is read, and it is overwritten) to tridiagonal form.
fn tridiagonalize<T: Scalar>(a: &mut [T], n: usize, want_q: bool) -> Tridiagonal<T> {
    let mut sub = vec![T::zero(); n.saturating_sub(1)];
    let mut reflectors: Vec<(usize, Vec<T>, f64)> = Vec::new();

    if n >= 3 {
        let (s0, mut cur) = reflector((1..n).map(|i| a[i * n]).collect());
        sub[0] = s0;
        let mut p = match &cur {
            Some((v, _)) => sweep(a, n, 0, None, Some(v)),
            None => Vec::new(),
        };
        for k in 0..n - 2 {
            let start = k + 1;
            // p = τBv, K = (τ/2)·v†p (real for Hermitian B), w = p − K·v
            let w = cur.as_ref().map(|(v, tau)| {
                let mut vp = T::zero();
                for (vi, pi) in v.iter().zip(p.iter_mut()) {
                    *pi = pi.scale(*tau);
                    vp += vi.conj() * *pi;
                }
                let kk = 0.5 * tau * vp.re();
                p.iter()
                    .zip(v)
                    .map(|(pi, vi)| *pi - vi.scale(kk))
                    .collect::<Vec<T>>()
            });
            let update = cur
                .as_ref()
                .zip(w.as_ref())
                .map(|((v, _), w)| (v.as_slice(), w.as_slice()));

            // The next reflector only needs the updated column `start`.
            let next = if k + 1 < n - 2 {
                let x = (start + 1..n)
                    .map(|i| {
                        let mut x = a[i * n + start];
                        if let Some((v, w)) = update {
                            let ii = i - start;
                            x -= v[ii] * w[0].conj() + w[ii] * v[0].conj();
                        }
                        x
                    })
                    .collect();
                let (s, r) = reflector(x);
                sub[k + 1] = s;
                r
            } else {
                None
            };
            if update.is_some() || next.is_some() {
                p = sweep(
                    a,
                    n,
                    start,
                    update,
                    next.as_ref().map(|(v, _)| v.as_slice()),
                );
            }
            if let (true, Some((v, tau))) = (want_q, cur.take()) {
                reflectors.push((start, v, tau));
            }
            cur = next;
        }
    }
    if n >= 2 {
        sub[n - 2] = a[(n - 1) * n + (n - 2)];
    }
    let diag = (0..n).map(|i| a[i * n + i].re()).collect();

    let q = want_q.then(|| {
        let mut q = vec![T::zero(); n * n];
        for i in 0..n {
            q[i * n + i] = T::one();
        }
        // Q = H_0 H_1 ⋯, applied from the right.
        for (start, v, tau) in &reflectors {
            for r in 0..n {
                let row = &mut q[r * n + start..r * n + n];
                let s = dot(row, v).scale(*tau);
                for (x, vi) in row.iter_mut().zip(v) {
                    *x -= s * vi.conj();
                }
            }
        }
        q
    });
    Tridiagonal { diag, sub, q }
}

/// Implicit QL on a real symmetric tridiagonal matrix. `offdiag[i]` couples
/// `i` and `i + 1`. If `z` is given (row-major `n × n`), the rotations are
/// accumulated into its columns.
pub(crate) fn tridiagonal_ql(
    diag: &mut [f64],
    offdiag: &[f64],
    mut z: Option<&mut [f64]>,
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&offdiag[..n - 1]);
    let d = diag;
    // Entries below ε‖T‖ are negligible in the normwise sense; without this
    // a cluster of eigenvalues at roundoff level never deflates.
    let t_norm = (0..n).map(|i| d[i].abs() + e[i].abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * t_norm;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence {
                    method: "tridiagonal QL",
                    iterations,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[k * n + i + 1];
                        let zi = z[k * n + i];
                        z[k * n + i + 1] = s * zi + c * f;
                        z[k * n + i] = c * zi - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: Option<DenseMatrix>,
}

fn solve<T: Scalar>(
    mut a: Vec<T>,
    n: usize,
    want_vectors: bool,
    to_c64: impl Fn(T) -> C64,
) -> Result<HermitianEigen> {
    let tri = tridiagonalize(&mut a, n, want_vectors);
    drop(a);
    let mut values = tri.diag;
    let off: Vec<f64> = tri.sub.iter().map(|x| x.abs2().sqrt()).collect();
    let mut z = want_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    });
    tridiagonal_ql(&mut values, &off, z.as_deref_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();

    let vectors = match (tri.q, z) {
        (Some(q), Some(z)) => {
            // T = D T_r D† with D diagonal phases turning the subdiagonal real.
            let mut phases = vec![C64::new(1.0, 0.0); n];
            for k in 0..n.saturating_sub(1) {
                let s = to_c64(tri.sub[k]);
                let mag = s.norm();
                phases[k + 1] = if mag == 0.0 {
                    phases[k]
                } else {
                    phases[k] * s / mag
                };
            }
            let mut out = DenseMatrix::zeros(n, n);
            for r in 0..n {
                for (col, &src) in order.iter().enumerate() {
                    let mut acc = ZERO;
                    for k in 0..n {
                        acc += to_c64(q[r * n + k]) * phases[k] * z[k * n + src];
                    }
                    out[(r, col)] = acc;
                }
            }
            Some(out)
        }
        _ => None,
    };
    Ok(HermitianEigen {
        values: sorted,
        vectors,
    })
}

/// Full eigendecomposition of a dense Hermitian matrix.
pub fn eigh(m: &DenseMatrix, want_vectors: bool) -> Result<HermitianEigen> {
    assert!(m.is_square(), "eigh needs a square matrix");
    let n = m.rows();
    if m.as_slice().iter().all(|x| x.im == 0.0) {
        let a: Vec<f64> = m.as_slice().iter().map(|x| x.re).collect();
        solve(a, n, want_vectors, |x| C64::new(x, 0.0))
    } else {
        solve(m.as_slice().to_vec(), n, want_vectors, |x| x)
    }
}

/// All eigenvalues of a sparse Hermitian matrix, ascending.
pub fn eigvalsh(h: &CscMatrix) -> Result<Vec<f64>> {
    let n = h.rows();
    let values = if h.is_real() {
        let mut a = vec![0.0; n * n];
        for (r, c, v) in h.iter() {
            a[r * n + c] += v.re;
        }
        solve(a, n, false, |x| C64::new(x, 0.0))?.values
    } else {
        let mut a = vec![ZERO; n * n];
        for (r, c, v) in h.iter() {
            a[r * n + c] += v;
        }
        solve(a, n, false, |x| x)?.values
    };
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_real() {
        let m = DenseMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = eigh(&m, true).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn complex_matrix_with_vectors() {
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let m = DenseMatrix::from_row_major(
            3,
            3,
            vec![
                one * 2.0,
                i,
                one * 0.5,
                -i,
                one * 1.0,
                one + i,
                one * 0.5,
                one - i,
                one * -1.0,
            ],
        );
        let e = eigh(&m, true).unwrap();
        let v = e.vectors.unwrap();
        let lam = DenseMatrix::from_real(
            3,
            3,
            &[
                e.values[0],
                0.0,
                0.0,
                0.0,
                e.values[1],
                0.0,
                0.0,
                0.0,
                e.values[2],
            ],
        );
        let recon = &(&v * &lam) * &v.adjoint();
        assert!(recon.max_abs_diff(&m) < 1e-12);
        assert!(v.unitarity_residual() < 1e-12);
        let trace: f64 = e.values.iter().sum();
        assert!((trace - 2.0).abs() < 1e-12);
    }

    #[test]
    fn already_diagonal_and_tiny() {
        let m = DenseMatrix::from_real(3, 3, &[3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(eigh(&m, false).unwrap().values, vec![-1.0, 2.0, 3.0]);
        let one = DenseMatrix::from_real(1, 1, &[4.0]);
        assert_eq!(eigh(&one, true).unwrap().values, vec![4.0]);
        let empty = DenseMatrix::zeros(0, 0);
        assert!(eigh(&empty, false).unwrap().values.is_empty());
    }

    #[test]
    fn sparse_projector_spectrum() {
        let p = CscMatrix::from_dense(&DenseMatrix::from_real(2, 2, &[0.5, -0.5, -0.5, 0.5]));
        let h = CscMatrix::identity(2).kron(&p);
        let vals = eigvalsh(&h).unwrap();
        let expected = [0.0, 0.0, 1.0, 1.0];
        for (a, b) in vals.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
