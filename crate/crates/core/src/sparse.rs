//! Coordinate-list assembly into compressed-sparse-column storage.

use num_complex::Complex64 as C64;

use crate::linalg::{DenseMatrix, ZERO};

/// Triplet accumulator. Duplicate coordinates are summed on conversion.
#[derive(Debug, Clone, Default)]
pub struct CooMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl CooMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize, capacity: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(row < self.rows && col < self.cols);
        if value != ZERO {
            self.entries.push((row, col, value));
        }
    }

    pub fn to_csc(mut self) -> CscMatrix {
        self.entries.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; self.cols + 1];
        let mut row_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().expect("entry exists") += v;
                continue;
            }
            row_idx.push(r);
            values.push(v);
            col_ptr[c + 1] += 1;
            last = Some((r, c));
        }
        for c in 0..self.cols {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut m = CscMatrix {
            rows: self.rows,
            cols: self.cols,
            col_ptr,
            row_idx,
            values,
        };
        m.prune();
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CscMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            col_ptr: vec![0; cols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut coo = CooMatrix::with_capacity(diag.len(), diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            coo.push(i, i, d);
        }
        coo.to_csc()
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut coo = CooMatrix::new(m.rows(), m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                coo.push(i, j, m[(i, j)]);
            }
        }
        coo.to_csc()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries as `(row, col, value)` in column-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.cols).flat_map(move |c| {
            (self.col_ptr[c]..self.col_ptr[c + 1])
                .map(move |k| (self.row_idx[k], c, self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[range.clone()].binary_search(&row) {
            Ok(k) => self.values[range.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        (self.col_ptr[col]..self.col_ptr[col + 1]).map(move |k| (self.row_idx[k], self.values[k]))
    }

    fn prune(&mut self) {
        if self.values.iter().all(|&v| v != ZERO) {
            return;
        }
        let mut coo = CooMatrix::new(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            coo.push(r, c, v);
        }
        *self = coo.to_csc();
    }

    pub fn to_coo(&self) -> CooMatrix {
        let mut coo = CooMatrix::with_capacity(self.rows, self.cols, self.nnz());
        for (r, c, v) in self.iter() {
            coo.push(r, c, v);
        }
        coo
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols, "matvec input length");
        assert_eq!(y.len(), self.rows, "matvec output length");
        y.fill(ZERO);
        for (c, &xc) in x.iter().enumerate() {
            if xc == ZERO {
                continue;
            }
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut coo = CooMatrix::with_capacity(self.cols, self.rows, self.nnz());
        for (r, c, v) in self.iter() {
            coo.push(c, r, v.conj());
        }
        coo.to_csc()
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut coo = CooMatrix::with_capacity(self.rows, self.cols, self.nnz() + other.nnz());
        for (r, c, v) in self.iter().chain(other.iter()) {
            coo.push(r, c, v);
        }
        coo.to_csc()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn sum<'a>(
        rows: usize,
        cols: usize,
        parts: impl IntoIterator<Item = &'a CscMatrix>,
    ) -> Self {
        let mut coo = CooMatrix::new(rows, cols);
        for part in parts {
            assert_eq!((part.rows, part.cols), (rows, cols));
            for (r, c, v) in part.iter() {
                coo.push(r, c, v);
            }
        }
        coo.to_csc()
    }

    /// Sparse product `self · rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut coo = CooMatrix::new(self.rows, rhs.cols);
        let mut acc = vec![ZERO; self.rows];
        let mut touched: Vec<usize> = Vec::new();
        for j in 0..rhs.cols {
            for (k, b) in rhs.column(j) {
                for (i, a) in self.column(k) {
                    if acc[i] == ZERO {
                        touched.push(i);
                    }
                    acc[i] += a * b;
                }
            }
            for &i in &touched {
                coo.push(i, j, acc[i]);
                acc[i] = ZERO;
            }
            touched.clear();
        }
        coo.to_csc()
    }

    /// Kronecker product; `self` indexes the slow (outer) factor.
    pub fn kron(&self, other: &Self) -> Self {
        let mut coo = CooMatrix::with_capacity(
            self.rows * other.rows,
            self.cols * other.cols,
            self.nnz() * other.nnz(),
        );
        for (r, c, v) in self.iter() {
            for (r2, c2, w) in other.iter() {
                coo.push(r * other.rows + r2, c * other.cols + c2, v * w);
            }
        }
        coo.to_csc()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Largest absolute row sum; an upper bound on the spectral norm of a
    /// Hermitian matrix.
    pub fn gershgorin_bound(&self) -> f64 {
        let mut sums = vec![0.0; self.rows];
        for (r, _, v) in self.iter() {
            sums[r] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}
