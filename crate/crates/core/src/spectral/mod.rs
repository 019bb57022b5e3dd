//! Spectra of compiled Hamiltonians: full dense diagonalization, the
//! iterative lowest-eigenvalue path, kernel counting and residual checks.

mod dense;
mod lanczos;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde_json::json;

pub use dense::{eigh, eigvalsh, HermitianEigen};
pub use lanczos::{estimate_norm, lowest_eigenvalues, KrylovOptions, KrylovResult};

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::sparse::CscMatrix;

pub const DEFAULT_KERNEL_TOL_REL: f64 = 1e-10;
pub const DEFAULT_DENSE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dense,
    Iterative,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Iterative => "iterative",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Method::Dense),
            "iterative" => Ok(Method::Iterative),
            other => Err(Error::InvalidState(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    pub method: Method,
    /// Number of lowest eigenvalues for the iterative path. Ignored by the
    /// dense path, which always returns the full spectrum.
    pub k: Option<usize>,
    /// Kernel threshold relative to `‖H‖₂`.
    pub kernel_tol_rel: f64,
    pub dense_limit: usize,
    pub block_size: usize,
    pub max_basis: usize,
    pub seed: u64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            method: Method::Dense,
            k: None,
            kernel_tol_rel: DEFAULT_KERNEL_TOL_REL,
            dense_limit: DEFAULT_DENSE_LIMIT,
            block_size: 4,
            max_basis: 160,
            seed: 0x5eed,
        }
    }
}

impl SpectrumOptions {
    pub fn dense() -> Self {
        Self::default()
    }

    pub fn iterative(k: usize) -> Self {
        Self {
            method: Method::Iterative,
            k: Some(k),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Ascending. Dense: the whole spectrum; iterative: the `k` lowest.
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    pub lambda_min_nonzero: Option<f64>,
    /// Absolute kernel threshold.
    pub kernel_tol: f64,
    pub method: Method,
    /// `‖H‖₂`, exact for the dense path and estimated otherwise.
    pub norm: f64,
}

impl SpectralReport {
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>, kernel_tol: f64, method: Method) -> Self {
        eigenvalues.sort_by(f64::total_cmp);
        let kernel_dim = eigenvalues.iter().take_while(|&&v| v < kernel_tol).count();
        let lambda_min_nonzero = eigenvalues.get(kernel_dim).copied();
        let norm = eigenvalues.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Self {
            eigenvalues,
            kernel_dim,
            lambda_min_nonzero,
            kernel_tol,
            method,
            norm,
        }
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "eigenvalues": self.eigenvalues,
            "kernel_dim": self.kernel_dim,
            "lambda_min_nonzero": self.lambda_min_nonzero,
            "kernel_tol": self.kernel_tol,
            "method": self.method.as_str(),
        })
    }
}

pub fn eigen_spectrum(h: &CscMatrix, opts: &SpectrumOptions) -> Result<SpectralReport> {
    let dim = h.rows();
    if h.cols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: h.cols(),
        });
    }
    match opts.method {
        Method::Dense => {
            if dim > opts.dense_limit {
                return Err(Error::DimensionTooLarge {
                    dim,
                    limit: opts.dense_limit,
                });
            }
            let values = eigvalsh(h)?;
            let norm = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut report =
                SpectralReport::from_eigenvalues(values, opts.kernel_tol_rel * norm, Method::Dense);
            report.norm = norm;
            Ok(report)
        }
        Method::Iterative => {
            let k = opts.k.unwrap_or(1).min(dim);
            let kopts = KrylovOptions {
                k,
                block_size: opts.block_size,
                max_basis: opts.max_basis,
                seed: opts.seed,
                ..KrylovOptions::lowest(k)
            };
            let r = lowest_eigenvalues(h, &kopts)?;
            let mut report = SpectralReport::from_eigenvalues(
                r.values,
                opts.kernel_tol_rel * r.norm_estimate,
                Method::Iterative,
            );
            report.norm = r.norm_estimate;
            Ok(report)
        }
    }
}

/// The smallest eigenvalue above the kernel threshold.
///
/// Fails with `AmbiguousKernelEdge` when some eigenvalue sits within a
/// factor of ten of the threshold, where moving the threshold would change
/// the answer.
pub fn smallest_nonzero(report: &SpectralReport) -> Result<f64> {
    let tol = report.kernel_tol;
    if let Some(&v) = report
        .eigenvalues
        .iter()
        .find(|&&v| v >= tol / 10.0 && v <= tol * 10.0)
    {
        return Err(Error::AmbiguousKernelEdge {
            value: v,
            kernel_tol: tol,
        });
    }
    report.lambda_min_nonzero.ok_or(Error::NoNonzeroEigenvalue)
}

/// `‖Hv‖₂ / ‖v‖₂`.
pub fn verify_kernel(h: &CscMatrix, v: &[C64]) -> Result<f64> {
    if v.len() != h.cols() {
        return Err(Error::DimensionMismatch {
            expected: h.cols(),
            actual: v.len(),
        });
    }
    let nv = norm(v);
    if nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(norm(&h.matvec(v)) / nv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_unitary_term_spectrum() {
        let h = crate::compiler::unitary_term(&CscMatrix::identity(2), 1, 2).unwrap();
        let r = eigen_spectrum(&h, &SpectrumOptions::dense()).unwrap();
        assert_eq!(r.kernel_dim, 2);
        for (got, want) in r.eigenvalues.iter().zip([0.0, 0.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
        assert!((smallest_nonzero(&r).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn smallest_nonzero_examples() {
        let r = SpectralReport::from_eigenvalues(vec![0.0, 0.0, 0.25, 1.0], 1e-10, Method::Dense);
        assert_eq!(smallest_nonzero(&r).unwrap(), 0.25);
        let r = SpectralReport::from_eigenvalues(vec![1e-16, 5e-11, 0.3], 1e-10, Method::Dense);
        assert!(matches!(
            smallest_nonzero(&r),
            Err(Error::AmbiguousKernelEdge { .. })
        ));
        let r = SpectralReport::from_eigenvalues(vec![0.0, 1e-14], 1e-10, Method::Dense);
        assert!(matches!(
            smallest_nonzero(&r),
            Err(Error::NoNonzeroEigenvalue)
        ));
    }

    #[test]
    fn dense_limit_enforced() {
        let h = CscMatrix::identity(5);
        let opts = SpectrumOptions {
            dense_limit: 4,
            ..SpectrumOptions::dense()
        };
        assert!(matches!(
            eigen_spectrum(&h, &opts),
            Err(Error::DimensionTooLarge { dim: 5, limit: 4 })
        ));
    }

    #[test]
    fn verify_kernel_rejects_zero_vector() {
        let h = CscMatrix::identity(2);
        assert!(matches!(
            verify_kernel(&h, &[C64::new(0.0, 0.0); 2]),
            Err(Error::ZeroVector)
        ));
        let r = verify_kernel(&h, &[C64::new(3.0, 0.0), C64::new(0.0, 4.0)]).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn report_json_fields() {
        let r = SpectralReport::from_eigenvalues(vec![0.0, 0.5], 1e-10, Method::Iterative);
        let j = r.to_json();
        assert_eq!(j["kernel_dim"], 1);
        assert_eq!(j["method"], "iterative");
        assert_eq!(j["lambda_min_nonzero"], 0.5);
    }
}
