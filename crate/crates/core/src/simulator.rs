//! Dense statevector evolution with renormalised projective measurements.
//!
//! A post-selected measurement maps `|ψ⟩ ↦ Π|ψ⟩/√p` with `p = ⟨ψ|Π|ψ⟩`.
//! Tameness (the outcome probability being the same for every proof state)
//! is certified exactly from the Gram matrices of the un-normalised
//! evolution, and cross-checked by sampling random proof states.

use std::ops::Range;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde_json::json;

use crate::circuit::{Circuit, Probability, QubitRegister, Step};
use crate::error::{Error, Result};
use crate::linalg::{inner, norm, DenseMatrix, ONE, ZERO};

/// Post-selection on an outcome with probability below this is an error.
pub const ZERO_PROB_THRESHOLD: f64 = 1e-14;

/// Default absolute tolerance for tameness certification.
pub const DEFAULT_TAME_TOL: f64 = 1e-10;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
    n_qubits: usize,
}

impl StateVector {
    /// Wraps unit-norm amplitudes; the length must be a power of two.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let nrm = norm(&amps);
        if (nrm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(nrm));
        }
        Ok(Self { amps, n_qubits })
    }

    /// Normalizes `amps` to unit length.
    pub fn normalized(mut amps: Vec<C64>) -> Result<Self> {
        let n_qubits = qubits_for_len(amps.len())?;
        let nrm = norm(&amps);
        if nrm == 0.0 || !nrm.is_finite() {
            return Err(Error::ZeroVector);
        }
        amps.iter_mut().for_each(|a| *a /= nrm);
        Ok(Self { amps, n_qubits })
    }

    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Self { amps, n_qubits }
    }

    /// Product state from a label over `0`, `1`, `+`, `-`, one character per
    /// qubit (qubit 0 first). The empty label is the zero-qubit state.
    pub fn from_label(label: &str) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut state = vec![ONE];
        for ch in label.chars() {
            let q = match ch {
                '0' => [ONE, ZERO],
                '1' => [ZERO, ONE],
                '+' => [C64::new(h, 0.0), C64::new(h, 0.0)],
                '-' => [C64::new(h, 0.0), C64::new(-h, 0.0)],
                other => {
                    return Err(Error::InvalidState(format!(
                        "unknown label character `{other}`"
                    )))
                }
            };
            state = state.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        Ok(Self {
            n_qubits: label.chars().count(),
            amps: state,
        })
    }

    /// Parses either a basis/product label (`"01+"`) or a JSON amplitude
    /// list, `[[re, im], ...]` or `[re, ...]`. JSON amplitudes are
    /// normalized.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if !spec.starts_with('[') {
            return Self::from_label(spec);
        }
        let value: serde_json::Value = serde_json::from_str(spec)?;
        let items = value
            .as_array()
            .ok_or_else(|| Error::InvalidState("expected a JSON array".into()))?;
        let amps = items
            .iter()
            .map(|item| match item {
                serde_json::Value::Number(x) => x.as_f64().map(|re| C64::new(re, 0.0)),
                serde_json::Value::Array(pair) if pair.len() == 2 => {
                    Some(C64::new(pair[0].as_f64()?, pair[1].as_f64()?))
                }
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| {
                Error::InvalidState("amplitudes must be numbers or [re, im] pairs".into())
            })?;
        Self::normalized(amps)
    }

    /// Haar-random state: independent standard complex Gaussians, normalized.
    pub fn random(n_qubits: usize, rng: &mut impl rand::Rng) -> Self {
        let amps: Vec<C64> = (0..1usize << n_qubits)
            .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        Self::normalized(amps).expect("gaussian vector is non-zero")
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        inner(&self.amps, &other.amps).norm_sqr()
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        StateVector {
            amps,
            n_qubits: self.n_qubits + other.n_qubits,
        }
    }

    pub fn to_json_amplitudes(&self) -> serde_json::Value {
        json!(self.amps.iter().map(|a| [a.re, a.im]).collect::<Vec<_>>())
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidState(format!(
            "{len} amplitudes is not a power of two"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Applies a `2^k × 2^k` local operator to `targets` in place.
pub(crate) fn apply_local(
    amps: &mut [C64],
    local: &DenseMatrix,
    targets: &[usize],
    n_qubits: usize,
) {
    let k = targets.len();
    let size = 1usize << k;
    let masks: Vec<usize> = targets.iter().map(|&q| 1 << (n_qubits - 1 - q)).collect();
    let all: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..size)
        .map(|l| {
            masks
                .iter()
                .enumerate()
                .filter(|(i, _)| l >> (k - 1 - i) & 1 == 1)
                .map(|(_, m)| m)
                .sum()
        })
        .collect();
    let mut buf = vec![ZERO; size];
    for base in 0..amps.len() {
        if base & all != 0 {
            continue;
        }
        for (b, &off) in buf.iter_mut().zip(&offsets) {
            *b = amps[base + off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            amps[base + off] = local.row(r).iter().zip(&buf).map(|(m, x)| m * x).sum();
        }
    }
}

/// Applies the step's raw operator (unitary, or un-normalised projector).
pub(crate) fn apply_raw(amps: &mut [C64], step: &Step, n_qubits: usize) {
    match step {
        Step::Gate(g) => apply_local(amps, &g.gate.matrix(), &g.targets, n_qubits),
        Step::Measure(m) => apply_local(amps, &m.keep.projector(), &[m.target], n_qubits),
    }
}

/// One step of evolution. Returns the new state and the step probability
/// (1 for gates, `⟨s|Π|s⟩` for measurements).
pub fn apply_step(s: &StateVector, step: &Step) -> Result<(StateVector, f64)> {
    let mut amps = s.amps.clone();
    apply_raw(&mut amps, step, s.n_qubits);
    match step {
        Step::Gate(_) => Ok((
            StateVector {
                amps,
                n_qubits: s.n_qubits,
            },
            1.0,
        )),
        Step::Measure(_) => {
            let prob = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
            if prob < ZERO_PROB_THRESHOLD {
                return Err(Error::ZeroProbabilityOutcome { step: None, prob });
            }
            let scale = prob.sqrt();
            amps.iter_mut().for_each(|a| *a /= scale);
            Ok((
                StateVector {
                    amps,
                    n_qubits: s.n_qubits,
                },
                prob,
            ))
        }
    }
}

/// `proof ⊗ ancillas`, placing the proof amplitudes on the proof-role qubits.
pub fn initial_state(register: &QubitRegister, proof: &StateVector) -> Result<StateVector> {
    let proof_qubits = register.proof_qubits();
    if proof.n_qubits() != proof_qubits.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << proof_qubits.len(),
            actual: proof.dim(),
        });
    }
    let amps = initial_amplitudes(register, proof.amplitudes());
    Ok(StateVector {
        amps,
        n_qubits: register.n_qubits(),
    })
}

fn initial_amplitudes(register: &QubitRegister, proof: &[C64]) -> Vec<C64> {
    let n = register.n_qubits();
    let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
    (0..1usize << n)
        .map(|i| {
            let mut proof_index = 0usize;
            let mut amp = ONE;
            for (q, &role) in register.roles().iter().enumerate() {
                match role.initial_state() {
                    None => proof_index = (proof_index << 1) | bit(i, q),
                    Some(init) => amp *= init[bit(i, q)],
                }
            }
            amp * proof[proof_index]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `T + 1` states; `states[0]` is the initial register state.
    pub states: Vec<StateVector>,
    /// Outcome probability of each measurement, in circuit order.
    pub step_probs: Vec<f64>,
    /// 1-based step index of each entry of `step_probs`.
    pub measure_steps: Vec<usize>,
    pub joint_prob: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "step_probs": self.step_probs,
            "joint_prob": self.joint_prob,
            "final_state": self.final_state().to_json_amplitudes(),
        })
    }
}

pub fn run(c: &Circuit, proof: &StateVector) -> Result<Trajectory> {
    let mut state = initial_state(&c.register, proof)?;
    let mut states = Vec::with_capacity(c.n_steps() + 1);
    let mut step_probs = Vec::new();
    let mut measure_steps = Vec::new();
    for (i, step) in c.steps.iter().enumerate() {
        let (next, prob) = apply_step(&state, step).map_err(|e| match e {
            Error::ZeroProbabilityOutcome { prob, .. } => Error::ZeroProbabilityOutcome {
                step: Some(i + 1),
                prob,
            },
            other => other,
        })?;
        if let Step::Measure(_) = step {
            step_probs.push(prob);
            measure_steps.push(i + 1);
        }
        states.push(std::mem::replace(&mut state, next));
    }
    states.push(state);
    Ok(Trajectory {
        states,
        joint_prob: step_probs.iter().product(),
        step_probs,
        measure_steps,
    })
}

/// Evolves `|j⟩_proof ⊗ ancillas` for every proof basis state `j` without
/// renormalising, calling `visit(step_index, columns)` after every
/// measurement.
fn evolve_basis_columns(c: &Circuit, mut visit: impl FnMut(usize, &[Vec<C64>])) -> Vec<Vec<C64>> {
    let n = c.n_qubits();
    let d_in = 1usize << c.register.n_proof();
    let mut columns: Vec<Vec<C64>> = (0..d_in)
        .map(|j| {
            let mut e = vec![ZERO; d_in];
            e[j] = ONE;
            initial_amplitudes(&c.register, &e)
        })
        .collect();
    for (i, step) in c.steps.iter().enumerate() {
        for col in &mut columns {
            apply_raw(col, step, n);
        }
        if let Step::Measure(_) = step {
            visit(i, &columns);
        }
    }
    columns
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausOperator {
    /// Maps the proof block to `sys_block`.
    pub matrix: DenseMatrix,
    pub outcome_prob: f64,
}

impl KrausOperator {
    /// `‖L†L − pI‖_max`
    pub fn unitarity_residual(&self) -> f64 {
        let gram = &self.matrix.adjoint() * &self.matrix;
        gram.max_abs_diff(
            &DenseMatrix::identity(gram.rows()).scale(C64::new(self.outcome_prob, 0.0)),
        )
    }
}

/// The effective operator `L` taking the proof block to `sys_block` once
/// every other qubit has been post-selected.
///
/// Qubits outside `sys_block` are contracted with their final reference
/// state: the kept outcome of their last measurement, or their initial
/// ancilla state if no step touches them.
#[allow(clippy::needless_range_loop)]
pub fn kraus_operator(c: &Circuit, sys_block: Range<usize>) -> Result<KrausOperator> {
    let n = c.n_qubits();
    if sys_block.end > n || sys_block.is_empty() {
        return Err(Error::InvalidCircuit(format!(
            "sys_block {sys_block:?} out of range"
        )));
    }
    let n_proof = c.register.n_proof();
    if n_proof != sys_block.len() {
        return Err(Error::DimensionMismatch {
            expected: 1 << n_proof,
            actual: 1 << sys_block.len(),
        });
    }
    let last_touch = |q: usize| c.steps.iter().rposition(|s| s.qubits().contains(&q));
    let mut reference: Vec<Option<[C64; 2]>> = vec![None; n];
    for q in 0..n {
        let last = last_touch(q).map(|i| &c.steps[i]);
        if sys_block.contains(&q) {
            if let Some(Step::Measure(_)) = last {
                return Err(Error::MixedRoles(format!(
                    "qubit {q} in sys_block ends in a measurement"
                )));
            }
            continue;
        }
        reference[q] = Some(match last {
            Some(Step::Measure(m)) => m.keep.state(),
            Some(Step::Gate(_)) => {
                return Err(Error::MixedRoles(format!(
                    "qubit {q} outside sys_block is not post-selected"
                )))
            }
            None => c.register.role(q).initial_state().ok_or_else(|| {
                Error::MixedRoles(format!("proof qubit {q} lies outside sys_block"))
            })?,
        });
    }

    let columns = evolve_basis_columns(c, |_, _| {});
    let d_out = 1usize << sys_block.len();
    let mut matrix = DenseMatrix::zeros(d_out, columns.len());
    for (j, col) in columns.iter().enumerate() {
        for (i, &amp) in col.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let mut weight = ONE;
            let mut row = 0usize;
            for q in 0..n {
                let b = (i >> (n - 1 - q)) & 1;
                match reference[q] {
                    Some(r) => weight *= r[b].conj(),
                    None => row = (row << 1) | b,
                }
            }
            matrix[(row, j)] += weight * amp;
        }
    }
    let outcome_prob = (0..matrix.cols())
        .map(|j| norm(&matrix.column(j)).powi(2))
        .sum::<f64>()
        / matrix.cols() as f64;
    Ok(KrausOperator {
        matrix,
        outcome_prob,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TameConfig {
    pub n_samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for TameConfig {
    fn default() -> Self {
        Self {
            n_samples: 16,
            tol: DEFAULT_TAME_TOL,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TamenessReport {
    pub is_tame: bool,
    /// Joint post-selection probability of the whole circuit.
    pub p_estimate: f64,
    /// Largest spread (max − min) of any measurement's probability over the
    /// sampled proof states.
    pub max_prob_deviation: f64,
    /// `max_t ‖L_t†L_t − p_t I‖_max / p_t` over measurement prefixes, where
    /// `L_t` is the un-normalised evolution of the proof block through the
    /// `t`-th measurement and `p_t` its joint probability.
    pub unitarity_residual: f64,
    /// Certified conditional probability of each measurement.
    pub step_probs: Vec<f64>,
    /// 1-based step indices of the measurements.
    pub measure_steps: Vec<usize>,
    pub tol: f64,
}

impl TamenessReport {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "is_tame": self.is_tame,
            "p_estimate": self.p_estimate,
            "max_prob_deviation": self.max_prob_deviation,
            "unitarity_residual": self.unitarity_residual,
            "step_probs": self.step_probs,
            "measure_steps": self.measure_steps,
            "tol": self.tol,
        })
    }
}

/// Certifies that every post-selection in `c` has a proof-independent
/// probability.
pub fn check_tame(c: &Circuit, cfg: &TameConfig) -> TamenessReport {
    let n_proof = c.register.n_proof();
    let measure_steps: Vec<usize> = c.measurements().map(|(i, _)| i + 1).collect();
    let n_meas = measure_steps.len();

    // Exact certificate from Gram matrices of the un-normalised evolution.
    let mut gram_traces = Vec::with_capacity(n_meas);
    let mut residual: f64 = 0.0;
    evolve_basis_columns(c, |_, cols| {
        let d = cols.len();
        let mut trace = 0.0;
        let mut gram = vec![ZERO; d * d];
        for a in 0..d {
            for b in a..d {
                let g = inner(&cols[a], &cols[b]);
                gram[a * d + b] = g;
                if a == b {
                    trace += g.re;
                }
            }
        }
        let g = trace / d as f64;
        gram_traces.push(g);
        if g < ZERO_PROB_THRESHOLD {
            residual = f64::INFINITY;
            return;
        }
        for a in 0..d {
            for b in a..d {
                let target = if a == b { g } else { 0.0 };
                residual = residual.max((gram[a * d + b] - target).norm() / g);
            }
        }
    });
    let mut step_probs = Vec::with_capacity(n_meas);
    let mut prev = 1.0;
    for &g in &gram_traces {
        step_probs.push(if prev > 0.0 { g / prev } else { 0.0 });
        prev = g;
    }
    let p_estimate = gram_traces.last().copied().unwrap_or(1.0);

    // Sampling cross-check.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let proofs: Vec<StateVector> = (0..cfg.n_samples.max(1))
        .map(|_| StateVector::random(n_proof, &mut rng))
        .collect();
    let samples: Vec<Option<Vec<f64>>> = proofs
        .par_iter()
        .map(|proof| run(c, proof).ok().map(|t| t.step_probs))
        .collect();
    let mut max_prob_deviation: f64 = 0.0;
    if samples.iter().any(Option::is_none) || residual.is_infinite() {
        max_prob_deviation = 1.0;
    } else {
        for m in 0..n_meas {
            let probs = samples.iter().flatten().map(|s| s[m]);
            let (lo, hi) = probs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p), hi.max(p))
            });
            max_prob_deviation = max_prob_deviation.max(hi - lo);
        }
    }

    TamenessReport {
        is_tame: max_prob_deviation <= cfg.tol && residual <= cfg.tol,
        p_estimate,
        max_prob_deviation,
        unitarity_residual: residual,
        step_probs,
        measure_steps,
        tol: cfg.tol,
    }
}

/// Returns a copy of `c` whose measurements all carry the certified
/// probabilities from `report`. Declared probabilities are kept, but must
/// agree with the certificate within `report.tol`.
pub fn certify(c: &Circuit, report: &TamenessReport) -> Result<Circuit> {
    if !report.is_tame {
        return Err(Error::NotTame(format!(
            "probability spread {:e}, unitarity residual {:e}",
            report.max_prob_deviation, report.unitarity_residual
        )));
    }
    let mut out = c.clone();
    for (&k, &p) in report.measure_steps.iter().zip(&report.step_probs) {
        let Step::Measure(m) = &mut out.steps[k - 1] else {
            return Err(Error::InvalidCircuit(format!(
                "report does not match circuit at step {k}"
            )));
        };
        match m.declared_prob {
            Some(declared) if (declared.value() - p).abs() > report.tol => {
                return Err(Error::NotTame(format!(
                    "declared probability {declared} at step {k} disagrees with certified {p}"
                )));
            }
            Some(_) => {}
            None => m.declared_prob = Some(Probability::Real(p)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, Basis, Gate, MeasureStep, Outcome, Role};

    fn gadget() -> Circuit {
        parse_circuit("qubits 2\nroles proof:0 plus:1\nstep gate CZ 0 1\nstep measure X 0 keep +")
            .unwrap()
    }

    #[test]
    fn gadget_measurement_has_probability_half() {
        let s = StateVector::from_label("++").unwrap();
        let (s, _) = apply_step(&s, &gadget().steps[0]).unwrap();
        let (out, p) = apply_step(&s, &gadget().steps[1]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_and_orthogonal_outcomes() {
        let zero = StateVector::zero(1);
        let keep0 = Step::Measure(MeasureStep::new(Basis::Z, 0, Outcome::Zero));
        let (out, p) = apply_step(&zero, &keep0).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(out, zero);
        let keep1 = Step::Measure(MeasureStep::new(Basis::Z, 0, Outcome::One));
        assert!(matches!(
            apply_step(&zero, &keep1),
            Err(Error::ZeroProbabilityOutcome { .. })
        ));
    }

    #[test]
    fn run_reports_offending_step() {
        let c = parse_circuit(
            "qubits 1\nroles zero:0\nstep gate H 0\nstep gate H 0\nstep measure Z 0 keep 1",
        )
        .unwrap();
        let err = run(&c, &StateVector::from_label("").unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::ZeroProbabilityOutcome { step: Some(3), .. }
        ));
    }

    #[test]
    fn empty_circuit_trajectory() {
        let c = parse_circuit("qubits 1\nroles proof:0").unwrap();
        let t = run(&c, &StateVector::zero(1)).unwrap();
        assert_eq!(t.states.len(), 1);
        assert_eq!(t.joint_prob, 1.0);
        assert_eq!(t.final_state(), &StateVector::zero(1));
    }

    #[test]
    fn initial_state_places_proof_between_ancillas() {
        let reg = QubitRegister::new(vec![Role::Zero, Role::Proof, Role::Zero]);
        let s = initial_state(&reg, &StateVector::from_label("1").unwrap()).unwrap();
        assert_eq!(s, StateVector::from_label("010").unwrap());
        assert!(initial_state(&reg, &StateVector::zero(2)).is_err());
    }

    #[test]
    fn gadget_kraus_operator_is_scaled_hadamard() {
        let k = kraus_operator(&gadget(), 1..2).unwrap();
        let expected = Gate::H
            .matrix()
            .scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        assert!(k.matrix.max_abs_diff(&expected) < 1e-15);
        assert!((k.outcome_prob - 0.5).abs() < 1e-15);
        assert!(k.unitarity_residual() < 1e-15);
    }

    #[test]
    fn kraus_rejects_measured_sys_block() {
        assert!(matches!(
            kraus_operator(&gadget(), 0..1),
            Err(Error::MixedRoles(_))
        ));
    }

    #[test]
    fn identity_kraus() {
        let c = parse_circuit("qubits 2\nroles proof:0..1").unwrap();
        let k = kraus_operator(&c, 0..2).unwrap();
        assert!(k.matrix.max_abs_diff(&DenseMatrix::identity(4)) < 1e-15);
        assert_eq!(k.outcome_prob, 1.0);
    }

    #[test]
    fn tameness_of_gadget_and_bare_measurement() {
        let cfg = TameConfig {
            n_samples: 100,
            ..TameConfig::default()
        };
        let report = check_tame(&gadget(), &cfg);
        assert!(report.is_tame);
        assert!((report.p_estimate - 0.5).abs() < 1e-15);
        let bare = parse_circuit("qubits 1\nroles proof:0\nstep measure Z 0 keep 0").unwrap();
        let report = check_tame(&bare, &cfg);
        assert!(!report.is_tame);
        assert!(report.max_prob_deviation > 0.1);
    }

    #[test]
    fn certify_fills_and_checks_probabilities() {
        let c = gadget();
        let report = check_tame(&c, &TameConfig::default());
        let certified = certify(&c, &report).unwrap();
        let (_, m) = certified.measurements().next().unwrap();
        assert!((m.declared_prob.unwrap().value() - 0.5).abs() < 1e-15);

        let mut wrong = c.clone();
        if let Step::Measure(m) = &mut wrong.steps[1] {
            m.declared_prob = Some(Probability::Ratio { num: 1, den: 3 });
        }
        assert!(matches!(certify(&wrong, &report), Err(Error::NotTame(_))));
    }

    #[test]
    fn state_specs() {
        let s = StateVector::from_spec("[[1, 0], [0, 1]]").unwrap();
        assert!((s.amplitudes()[1].im - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let s = StateVector::from_spec("[3, 4]").unwrap();
        assert!((s.amplitudes()[0].re - 0.6).abs() < 1e-15);
        assert!(StateVector::from_spec("[1, 0, 0]").is_err());
        assert!(StateVector::from_spec("0x").is_err());
        assert!(StateVector::new(vec![ONE, ONE]).is_err());
    }
}
