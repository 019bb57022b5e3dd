//! Least-squares fits of gap-scaling series: `y = a·n² + b·n + c` and
//! `y = A·e^(b·n) + c`, plus an RMSE-based choice between the two.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::Family;

const GN_MAX_ITERATIONS: usize = 200;
const GN_MAX_HALVINGS: usize = 30;
const GN_REL_STEP_TOL: f64 = 1e-10;
/// A model is chosen only when its RMSE is at most this fraction of the
/// other model's.
pub const DECISIVE_RMSE_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalingSeries {
    points: Vec<(u32, f64)>,
    pub family: Option<Family>,
    pub kernel_tol: Option<f64>,
    pub method: Option<String>,
}

#[derive(Debug, Deserialize)]
struct CsvPoint {
    n: u32,
    y: f64,
}

impl ScalingSeries {
    /// Requires strictly increasing `n` and finite, positive `y`.
    pub fn new(points: Vec<(u32, f64)>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Fit(format!(
                    "n values must be strictly increasing ({} after {})",
                    w[1].0, w[0].0
                )));
            }
        }
        if let Some(&(n, y)) = points.iter().find(|p| !(p.1.is_finite() && p.1 > 0.0)) {
            return Err(Error::Fit(format!(
                "y must be finite and positive (n = {n}, y = {y})"
            )));
        }
        Ok(Self {
            points,
            ..Self::default()
        })
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    /// Reads a CSV file with columns `n,y` (further columns are ignored).
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut points = Vec::new();
        for record in reader.deserialize() {
            let p: CsvPoint = record?;
            points.push((p.n, p.y));
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[(u32, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0 as f64).collect()
    }

    fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Exponential,
    Quadratic,
}

impl Model {
    /// `params` are `(A, b, c)` for the exponential and `(a, b, c)` for the
    /// quadratic model.
    pub fn eval(self, params: [f64; 3], n: f64) -> f64 {
        match self {
            Model::Exponential => params[0] * (params[1] * n).exp() + params[2],
            Model::Quadratic => (params[0] * n + params[1]) * n + params[2],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Model::Exponential => "exponential",
            Model::Quadratic => "quadratic",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: Model,
    pub params: [f64; 3],
    pub r_squared: f64,
    pub rmse: f64,
    pub converged: bool,
}

impl FitResult {
    fn new(model: Model, params: [f64; 3], xs: &[f64], ys: &[f64], converged: bool) -> Self {
        let (r_squared, rmse) = goodness(model, params, xs, ys);
        Self {
            model,
            params,
            r_squared,
            rmse,
            converged,
        }
    }

    pub fn predict(&self, n: f64) -> f64 {
        self.model.eval(self.params, n)
    }
}

fn goodness(model: Model, params: [f64; 3], xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let m = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / m;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| (model.eval(params, x) - y).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    (r2, (ss_res / m).sqrt())
}

/// Solves `min ‖X·β − y‖₂` by Householder QR. `rows` holds the design
/// matrix row by row.
fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    let p = rows.first().map_or(0, |r| r.len());
    if m < p {
        return Err(Error::Fit(format!("{m} equations for {p} unknowns")));
    }
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut b = rhs.to_vec();
    let scale = (0..p)
        .map(|j| a.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    for k in 0..p {
        let alpha = a[k..].iter().map(|r| r[k] * r[k]).sum::<f64>().sqrt();
        if alpha <= 1e-13 * scale || alpha == 0.0 {
            return Err(Error::Fit("rank-deficient design matrix".into()));
        }
        let alpha = if a[k][k] > 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = a[k..].iter().map(|r| r[k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        for j in k..p {
            let dot: f64 = v.iter().zip(&a[k..]).map(|(vi, r)| vi * r[j]).sum();
            let f = 2.0 * dot / vnorm2;
            for (vi, r) in v.iter().zip(a[k..].iter_mut()) {
                r[j] -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&b[k..]).map(|(vi, bi)| vi * bi).sum();
        let f = 2.0 * dot / vnorm2;
        for (vi, bi) in v.iter().zip(b[k..].iter_mut()) {
            *bi -= f * vi;
        }
    }
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let s: f64 = ((k + 1)..p).map(|j| a[k][j] * beta[j]).sum();
        beta[k] = (b[k] - s) / a[k][k];
    }
    Ok(beta)
}

fn require_points(series: &ScalingSeries, min: usize) -> Result<()> {
    if series.len() < min {
        return Err(Error::Fit(format!(
            "need at least {min} points, got {}",
            series.len()
        )));
    }
    Ok(())
}

pub fn fit_quadratic(series: &ScalingSeries) -> Result<FitResult> {
    require_points(series, 4)?;
    let xs = series.xs();
    let ys = series.ys();
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x * x, x, 1.0]).collect();
    let beta = least_squares(&rows, &ys)?;
    Ok(FitResult::new(
        Model::Quadratic,
        [beta[0], beta[1], beta[2]],
        &xs,
        &ys,
        true,
    ))
}

/// Fits `ln|y − c| = ln|A| + b·n` for a fixed offset `c`. Returns
/// `(A, b, r²)` of the log-linear regression. All `y − c` must share a
/// sign.
pub fn fit_log_linear(series: &ScalingSeries, c: f64) -> Result<(f64, f64, f64)> {
    let xs = series.xs();
    let shifted: Vec<f64> = series.ys().iter().map(|y| y - c).collect();
    log_linear(&xs, &shifted)
}

fn log_linear(xs: &[f64], shifted: &[f64]) -> Result<(f64, f64, f64)> {
    let sign = if shifted.first().copied().unwrap_or(0.0) < 0.0 {
        -1.0
    } else {
        1.0
    };
    if shifted.iter().any(|&d| d.is_nan() || d * sign <= 0.0) {
        return Err(Error::Fit(
            "offset values y - c change sign or vanish".into(),
        ));
    }
    let logs: Vec<f64> = shifted.iter().map(|d| (d * sign).ln()).collect();
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
    let beta = least_squares(&rows, &logs)?;
    let (r2, _) = goodness(Model::Quadratic, [0.0, beta[1], beta[0]], xs, &logs);
    Ok((sign * beta[0].exp(), beta[1], r2))
}

/// Offset of a geometric sequence through three equally spaced samples.
fn geometric_offset(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let m = xs.len();
    let first = 0;
    let last = m - 1;
    let mid_x = 0.5 * (xs[first] + xs[last]);
    let triple = match xs.iter().position(|&x| x == mid_x) {
        Some(mid) => (first, mid, last),
        None if xs[1] - xs[0] == xs[2] - xs[1] => (0, 1, 2),
        None => return None,
    };
    let (y1, y2, y3) = (ys[triple.0], ys[triple.1], ys[triple.2]);
    let denom = y1 + y3 - 2.0 * y2;
    if denom == 0.0 {
        return None;
    }
    let c = (y1 * y3 - y2 * y2) / denom;
    c.is_finite().then_some(c)
}

fn sum_squares(params: [f64; 3], xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| (Model::Exponential.eval(params, x) - y).powi(2))
        .sum()
}

/// Fits `y = A·e^(b·n) + c` by damped Gauss–Newton from a geometric-offset
/// and log-linear start. A run that stops without meeting the step
/// tolerance still returns its best iterate, with `converged = false`.
pub fn fit_exponential(series: &ScalingSeries) -> Result<FitResult> {
    require_points(series, 4)?;
    let xs = series.xs();
    let ys = series.ys();
    let (lo, hi) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
    if hi == lo {
        return Err(Error::Fit("all y values are equal".into()));
    }
    let spread = hi - lo;

    let fallback_c = lo - 1e-6 * spread;
    let mut start = None;
    if let Some(c) = geometric_offset(&xs, &ys) {
        let shifted: Vec<f64> = ys.iter().map(|y| y - c).collect();
        if let Ok((a, b, _)) = log_linear(&xs, &shifted) {
            start = Some([a, b, c]);
        }
    }
    let mut params = match start {
        Some(p) => p,
        None => {
            let shifted: Vec<f64> = ys.iter().map(|y| y - fallback_c).collect();
            let (a, b, _) = log_linear(&xs, &shifted)?;
            [a, b, fallback_c]
        }
    };

    let y_scale: f64 = ys.iter().map(|y| y * y).sum();
    let mut ssr = sum_squares(params, &xs, &ys);
    let mut converged = false;
    for _ in 0..GN_MAX_ITERATIONS {
        if ssr <= 1e-30 * y_scale {
            converged = true;
            break;
        }
        let [a, b, _] = params;
        let rows: Vec<Vec<f64>> = xs
            .iter()
            .map(|&x| {
                let e = (b * x).exp();
                vec![e, a * x * e, 1.0]
            })
            .collect();
        let neg_res: Vec<f64> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| y - Model::Exponential.eval(params, x))
            .collect();
        let Ok(delta) = least_squares(&rows, &neg_res) else {
            break;
        };
        let rel_step = (0..3)
            .map(|j| delta[j].abs() / params[j].abs().max(1e-300))
            .fold(0.0, f64::max);

        let mut step = 1.0;
        let mut accepted = None;
        for halving in 0..=GN_MAX_HALVINGS {
            let trial = [
                params[0] + step * delta[0],
                params[1] + step * delta[1],
                params[2] + step * delta[2],
            ];
            let trial_ssr = sum_squares(trial, &xs, &ys);
            // Close to the minimum the sum of squares is flat to roundoff;
            // a full step that does not measurably increase it is kept.
            let flat = halving == 0 && trial_ssr <= ssr * (1.0 + 1e-12);
            if trial_ssr.is_finite() && (trial_ssr < ssr || flat) {
                accepted = Some((trial, trial_ssr));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((trial, trial_ssr)) => {
                params = trial;
                ssr = trial_ssr;
                if rel_step * step < GN_REL_STEP_TOL {
                    converged = true;
                    break;
                }
            }
            None => {
                // No descent along the Gauss–Newton direction: the iterate
                // is a minimum up to roundoff when the proposed step is tiny.
                converged = rel_step < 1e-6;
                break;
            }
        }
    }
    Ok(FitResult::new(
        Model::Exponential,
        params,
        &xs,
        &ys,
        converged,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Exponential,
    Quadratic,
    Inconclusive,
}

impl Selection {
    pub fn as_str(self) -> &'static str {
        match self {
            Selection::Exponential => "exponential",
            Selection::Quadratic => "quadratic",
            Selection::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelChoice {
    pub selected: Selection,
    /// The model with the lower RMSE, decisive or not.
    pub best: Option<Model>,
    /// RMSE of the better model over RMSE of the worse one.
    pub rmse_ratio: Option<f64>,
    pub exponential: Option<FitResult>,
    pub quadratic: Option<FitResult>,
}

/// Fits both models and picks one only when its RMSE is at most half the
/// other's. Fewer than five points, a failed fit or two exact fits give
/// `Inconclusive`.
pub fn compare_models(series: &ScalingSeries) -> ModelChoice {
    let (exponential, quadratic) = if series.len() >= 5 {
        (fit_exponential(series).ok(), fit_quadratic(series).ok())
    } else {
        (None, None)
    };
    let mut choice = ModelChoice {
        selected: Selection::Inconclusive,
        best: None,
        rmse_ratio: None,
        exponential,
        quadratic,
    };
    let (Some(e), Some(q)) = (&choice.exponential, &choice.quadratic) else {
        return choice;
    };
    choice.best = Some(if e.rmse < q.rmse {
        Model::Exponential
    } else {
        Model::Quadratic
    });
    let scale = series
        .points()
        .iter()
        .map(|p| p.1.abs())
        .fold(0.0, f64::max);
    let floor = 1e-12 * scale;
    let (lo, hi) = (e.rmse.min(q.rmse), e.rmse.max(q.rmse));
    if hi <= floor {
        return choice;
    }
    let ratio = lo.max(floor) / hi;
    choice.rmse_ratio = Some(ratio);
    if ratio <= DECISIVE_RMSE_RATIO {
        choice.selected = match choice.best {
            Some(Model::Exponential) => Selection::Exponential,
            _ => Selection::Quadratic,
        };
    }
    choice
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, ns: std::ops::RangeInclusive<u32>) -> ScalingSeries {
        ScalingSeries::new(ns.map(|n| (n, f(n as f64))).collect()).unwrap()
    }

    #[test]
    fn quadratic_exact() {
        let s = series(|n| n * n, 1..=6);
        let fit = fit_quadratic(&s).unwrap();
        for (got, want) in fit.params.iter().zip([1.0, 0.0, 0.0]) {
            assert!((got - want).abs() < 1e-10, "{:?}", fit.params);
        }
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_exact() {
        let s = series(f64::exp, 1..=8);
        let fit = fit_exponential(&s).unwrap();
        assert!(fit.converged);
        for (got, want) in fit.params.iter().zip([1.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-8, "{:?}", fit.params);
        }
    }

    #[test]
    fn preconditions() {
        let s = series(|n| n, 1..=3);
        assert!(fit_quadratic(&s).is_err());
        assert!(fit_exponential(&series(|_| 2.0, 1..=6)).is_err());
        assert!(ScalingSeries::new(vec![(2, 1.0), (1, 2.0)]).is_err());
        assert!(ScalingSeries::new(vec![(1, -1.0)]).is_err());
        assert_eq!(
            compare_models(&series(|_| 2.0, 1..=6)).selected,
            Selection::Inconclusive
        );
        assert_eq!(
            compare_models(&series(|n| n * n, 1..=4)).selected,
            Selection::Inconclusive
        );
    }

    #[test]
    fn least_squares_detects_rank_deficiency() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert!(least_squares(&rows, &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn fit_json_shape() {
        let fit = fit_quadratic(&series(|n| n * n + 1.0, 1..=5)).unwrap();
        let j = serde_json::to_value(&fit).unwrap();
        assert_eq!(j["model"], "quadratic");
        assert_eq!(j["params"].as_array().unwrap().len(), 3);
    }
}
