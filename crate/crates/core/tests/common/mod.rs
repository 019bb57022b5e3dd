#![allow(dead_code)]

use hamforge::linalg::DenseMatrix;
use hamforge::sparse::CscMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of `a_pq` with a diagonal unitary,
/// then applies the real symmetric Jacobi rotation that zeroes it.
#[allow(clippy::needless_range_loop)]
pub fn jacobi_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<C64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let frob2: f64 = a.iter().flatten().map(|x| x.norm_sqr()).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].norm_sqr())
            .sum();
        if off <= 1e-30 * frob2 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let e = apq / r;
                let theta = (a[q][q].re - a[p][p].re) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = D·R with D = diag(1, ē): U_pp = c, U_pq = s, U_qp = −s·ē, U_qq = c·ē.
                let (upp, upq, uqp, uqq) = (
                    C64::new(c, 0.0),
                    C64::new(s, 0.0),
                    -e.conj() * s,
                    e.conj() * c,
                );
                for row in a.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = xp * upp + xq * uqp;
                    row[q] = xp * upq + xq * uqq;
                }
                for k in 0..n {
                    let (xp, xq) = (a[p][k], a[q][k]);
                    a[p][k] = upp.conj() * xp + uqp.conj() * xq;
                    a[q][k] = upq.conj() * xp + uqq.conj() * xq;
                }
                a[p][q] = C64::new(0.0, 0.0);
                a[q][p] = C64::new(0.0, 0.0);
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[i][i].re).collect();
    values.sort_by(f64::total_cmp);
    values
}

pub fn jacobi_sparse(h: &CscMatrix) -> Vec<f64> {
    jacobi_eigenvalues(&h.to_dense())
}

pub fn random_hermitian(n: usize, complex: bool, rng: &mut impl Rng) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(rng.sample(StandardNormal), 0.0);
        for j in 0..i {
            let im = if complex {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
            let v = C64::new(rng.sample(StandardNormal), im);
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    m
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn spectral_norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).fold(0.0, f64::max)
}
