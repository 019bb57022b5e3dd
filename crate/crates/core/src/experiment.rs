//! Gap-scaling sweeps over a benchmark family: certify, compile, solve, fit,
//! and write `scaling.csv`, `fits.json` and `scaling.svg`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::compiler::{compile, CompileOptions};
use crate::error::{Error, Result};
use crate::families::Family;
use crate::fitting::{compare_models, fit_log_linear, ModelChoice, ScalingSeries};
use crate::plot::{scaling_svg, PlotSpec};
use crate::simulator::{certify, check_tame, run, StateVector, TameConfig};
use crate::spectral::{
    eigen_spectrum, smallest_nonzero, Method, SpectrumOptions, DEFAULT_DENSE_LIMIT,
    DEFAULT_KERNEL_TOL_REL,
};

pub const CSV_HEADER: &str = "n,dim,kernel_dim,lambda_min,inv_lambda_min,wall_ms,flag";
pub const THREADS_ENV: &str = "HAMFORGE_THREADS";
/// Lowest eigenvalues requested above the expected kernel on the iterative
/// path.
const ITERATIVE_EXTRA: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Dense up to the dense limit, iterative beyond.
    #[default]
    Auto,
    Dense,
    Iterative,
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "dense" => Ok(MethodChoice::Dense),
            "iterative" => Ok(MethodChoice::Iterative),
            other => Err(Error::InvalidState(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodChoice::Auto => "auto",
            MethodChoice::Dense => "dense",
            MethodChoice::Iterative => "iterative",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n_range: RangeInclusive<u32>,
    pub method: MethodChoice,
    /// Kernel threshold relative to `‖H‖₂`.
    pub kernel_tol: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Fill the `wall_ms` column. Off by default so repeated runs produce
    /// identical files.
    pub record_timing: bool,
    /// Worker threads for the sweep; `None` reads `HAMFORGE_THREADS`, then
    /// falls back to the global rayon pool.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(
        family: Family,
        n_range: RangeInclusive<u32>,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            family,
            n_range,
            method: MethodChoice::Auto,
            kernel_tol: DEFAULT_KERNEL_TOL_REL,
            seed: 0,
            output_dir: output_dir.into(),
            record_timing: false,
            threads: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_range.is_empty() {
            return Err(Error::InvalidState(format!(
                "empty n range {}..{}",
                self.n_range.start(),
                self.n_range.end()
            )));
        }
        if *self.n_range.start() < 1 {
            return Err(Error::InvalidState("n must be at least 1".into()));
        }
        if self.kernel_tol.is_nan() || self.kernel_tol <= 0.0 {
            return Err(Error::InvalidState(
                "kernel tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowFlag {
    Ok,
    AmbiguousKernelEdge,
    NoNonzeroEigenvalue,
}

impl RowFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowFlag::Ok => "ok",
            RowFlag::AmbiguousKernelEdge => "ambiguous_kernel_edge",
            RowFlag::NoNonzeroEigenvalue => "no_nonzero_eigenvalue",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: u32,
    pub dim: usize,
    pub kernel_dim: usize,
    pub lambda_min: Option<f64>,
    pub wall_ms: u64,
    pub flag: RowFlag,
    pub method: Method,
    /// Joint post-selection probability measured on a random proof state.
    pub joint_prob: f64,
    /// Lowest eigenvalue, for the positivity check.
    pub min_eigenvalue: f64,
    pub norm: f64,
}

impl ScalingRow {
    pub fn inv_lambda_min(&self) -> Option<f64> {
        self.lambda_min.map(|l| 1.0 / l)
    }

    fn csv_line(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.dim,
            self.kernel_dim,
            fmt(self.lambda_min),
            fmt(self.inv_lambda_min()),
            self.wall_ms,
            self.flag.as_str()
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub rows: Vec<ScalingRow>,
    pub choice: ModelChoice,
    /// `(A, b, r²)` of the log-linear fit of `y − c`, with `c` from the
    /// exponential fit.
    pub log_linear: Option<(f64, f64, f64)>,
    pub warnings: Vec<String>,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub svg_path: PathBuf,
}

impl ExperimentOutcome {
    pub fn ambiguous(&self) -> bool {
        self.rows.iter().any(|r| r.flag != RowFlag::Ok)
    }

    pub fn series(&self) -> Vec<(u32, f64)> {
        self.rows
            .iter()
            .filter_map(|r| r.inv_lambda_min().map(|y| (r.n, y)))
            .collect()
    }
}

fn solve_instance(cfg: &ExperimentConfig, n: u32) -> Result<ScalingRow> {
    let start = Instant::now();
    let family = cfg.family;
    let n_us = n as usize;
    let circuit = family.circuit(n_us)?;
    let report = check_tame(
        &circuit,
        &TameConfig {
            seed: cfg.seed ^ u64::from(n),
            ..TameConfig::default()
        },
    );
    let circuit = certify(&circuit, &report)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(u64::from(n)));
    let proof = StateVector::random(circuit.register.n_proof(), &mut rng);
    let joint_prob = run(&circuit, &proof)?.joint_prob;

    let h = compile(&circuit, &CompileOptions::propagation())?;
    let dim = h.dim();
    let method = match cfg.method {
        MethodChoice::Dense => Method::Dense,
        MethodChoice::Iterative => Method::Iterative,
        MethodChoice::Auto if dim <= DEFAULT_DENSE_LIMIT => Method::Dense,
        MethodChoice::Auto => Method::Iterative,
    };
    let opts = SpectrumOptions {
        method,
        k: Some(family.kernel_dim(n_us) + ITERATIVE_EXTRA),
        kernel_tol_rel: cfg.kernel_tol,
        seed: cfg.seed,
        ..SpectrumOptions::default()
    };
    let spectrum = eigen_spectrum(h.total(), &opts)?;
    let (lambda_min, flag) = match smallest_nonzero(&spectrum) {
        Ok(l) => (Some(l), RowFlag::Ok),
        Err(Error::AmbiguousKernelEdge { .. }) => (None, RowFlag::AmbiguousKernelEdge),
        Err(Error::NoNonzeroEigenvalue) => (None, RowFlag::NoNonzeroEigenvalue),
        Err(e) => return Err(e),
    };
    let wall_ms = if cfg.record_timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    Ok(ScalingRow {
        n,
        dim,
        kernel_dim: spectrum.kernel_dim,
        lambda_min,
        wall_ms,
        flag,
        method,
        joint_prob,
        min_eigenvalue: spectrum.min_eigenvalue().unwrap_or(0.0),
        norm: spectrum.norm,
    })
}

fn thread_count(cfg: &ExperimentConfig) -> Option<usize> {
    cfg.threads.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&t| t > 0)
    })
}

fn sweep(cfg: &ExperimentConfig) -> Result<Vec<ScalingRow>> {
    let ns: Vec<u32> = cfg.n_range.clone().collect();
    let work = || {
        ns.par_iter()
            .map(|&n| solve_instance(cfg, n))
            .collect::<Result<Vec<_>>>()
    };
    match thread_count(cfg) {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidState(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

fn monotonicity_warnings(rows: &[ScalingRow]) -> Vec<String> {
    let ys: Vec<(u32, f64)> = rows
        .iter()
        .filter_map(|r| r.inv_lambda_min().map(|y| (r.n, y)))
        .collect();
    ys.windows(2)
        .filter(|w| w[1].1 <= w[0].1)
        .map(|w| {
            format!(
                "1/lambda_min not increasing: n = {} gives {:.6e}, n = {} gives {:.6e}",
                w[0].0, w[0].1, w[1].0, w[1].1
            )
        })
        .collect()
}

fn fits_json(
    cfg: &ExperimentConfig,
    rows: &[ScalingRow],
    choice: &ModelChoice,
    log_linear: Option<(f64, f64, f64)>,
) -> serde_json::Value {
    json!({
        "family": cfg.family.as_str(),
        "n_range": [cfg.n_range.start(), cfg.n_range.end()],
        "method": cfg.method.to_string(),
        "kernel_tol_rel": cfg.kernel_tol,
        "seed": cfg.seed,
        "series": rows.iter().map(|r| json!({
            "n": r.n,
            "dim": r.dim,
            "kernel_dim": r.kernel_dim,
            "lambda_min": r.lambda_min,
            "y": r.inv_lambda_min(),
            "joint_prob": r.joint_prob,
            "method": r.method.as_str(),
            "flag": r.flag.as_str(),
        })).collect::<Vec<_>>(),
        "exponential": choice.exponential,
        "quadratic": choice.quadratic,
        "log_linear": log_linear.map(|(a, b, r2)| json!({
            "c": choice.exponential.as_ref().map(|e| e.params[2]),
            "A": a,
            "b": b,
            "r_squared": r2,
        })),
        "comparison": {
            "selected": choice.selected.as_str(),
            "rmse_ratio": choice.rmse_ratio,
        },
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Runs the sweep and writes the three output files. Ambiguous rows are
/// written with a flag and left out of the fits; any error other than that
/// aborts before writing.
pub fn run_scaling(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let rows = sweep(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    let csv_path = cfg.output_dir.join("scaling.csv");
    write_text(&csv_path, &csv)?;

    let points: Vec<(u32, f64)> = rows
        .iter()
        .filter_map(|r| r.inv_lambda_min().map(|y| (r.n, y)))
        .collect();
    let (choice, log_linear) = match ScalingSeries::new(points.clone()) {
        Ok(series) => {
            let series = series.with_family(cfg.family);
            let choice = compare_models(&series);
            let log_linear = choice
                .exponential
                .as_ref()
                .and_then(|e| fit_log_linear(&series, e.params[2]).ok());
            (choice, log_linear)
        }
        Err(_) => (compare_models(&ScalingSeries::default()), None),
    };

    let json_path = cfg.output_dir.join("fits.json");
    let mut text = serde_json::to_string_pretty(&fits_json(cfg, &rows, &choice, log_linear))?;
    text.push('\n');
    write_text(&json_path, &text)?;

    let log_y = cfg.family == Family::F1;
    let fit = if log_y {
        choice.exponential.as_ref()
    } else {
        choice.quadratic.as_ref()
    };
    let xy: Vec<(f64, f64)> = points.iter().map(|&(n, y)| (f64::from(n), y)).collect();
    let title = format!(
        "{}: inverse smallest non-zero eigenvalue",
        cfg.family.as_str().to_uppercase()
    );
    let svg = scaling_svg(
        &xy,
        fit,
        &PlotSpec {
            title: &title,
            x_label: "n (Hadamard gadgets)",
            y_label: "1 / lambda_min",
            log_y,
        },
    );
    let svg_path = cfg.output_dir.join("scaling.svg");
    write_text(&svg_path, &svg)?;

    Ok(ExperimentOutcome {
        warnings: monotonicity_warnings(&rows),
        rows,
        choice,
        log_linear,
        csv_path,
        json_path,
        svg_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_range_rejected() {
        #[allow(clippy::reversed_empty_ranges)]
        let cfg = ExperimentConfig::new(Family::F2, 3..=2, "unused");
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_line_format() {
        let row = ScalingRow {
            n: 2,
            dim: 36,
            kernel_dim: 4,
            lambda_min: Some(0.5),
            wall_ms: 0,
            flag: RowFlag::Ok,
            method: Method::Dense,
            joint_prob: 0.0625,
            min_eigenvalue: 0.0,
            norm: 2.0,
        };
        assert_eq!(
            row.csv_line(),
            "2,36,4,5.0000000000000000e-1,2.0000000000000000e0,0,ok"
        );
        let flagged = ScalingRow {
            lambda_min: None,
            flag: RowFlag::AmbiguousKernelEdge,
            ..row
        };
        assert_eq!(flagged.csv_line(), "2,36,4,,,0,ambiguous_kernel_edge");
    }

    #[test]
    fn warns_on_non_increasing_series() {
        let mk = |n, l| ScalingRow {
            n,
            dim: 1,
            kernel_dim: 0,
            lambda_min: Some(l),
            wall_ms: 0,
            flag: RowFlag::Ok,
            method: Method::Dense,
            joint_prob: 1.0,
            min_eigenvalue: 0.0,
            norm: 1.0,
        };
        assert!(monotonicity_warnings(&[mk(1, 0.5), mk(2, 0.25)]).is_empty());
        assert_eq!(monotonicity_warnings(&[mk(1, 0.25), mk(2, 0.5)]).len(), 1);
    }
}
