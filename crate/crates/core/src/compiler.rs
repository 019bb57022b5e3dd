//! Circuit-to-Hamiltonian compilation on `system ⊗ clock`.
//!
//! The clock is a qudit of dimension `T + 1`. Basis index
//! `sys_index · dim_clock + clock_index`, so the clock is the fast index.
//! Step `k` (1-based) of the circuit governs the clock transition
//! `k − 1 → k`: a gate contributes the usual propagation projector, a
//! post-selected measurement with probability `p` contributes the
//! renormalised-projector term
//!
//! ```text
//! N(p)·Π ⊗ ( (1/p)|t⟩⟨t| − (1/√p)(|t⟩⟨t+1| + |t+1⟩⟨t|) + |t+1⟩⟨t+1| )
//!   + (I − Π) ⊗ |t+1⟩⟨t+1|,        N(p) = p/(p+1)
//! ```
//!
//! whose kernel contains `|ψ⟩|t⟩ + (Π|ψ⟩/√p)|t+1⟩`.

use std::fmt;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::json;

use crate::circuit::{embed, Circuit, QubitRegister, Step};
use crate::error::{Error, Result};
use crate::linalg::{norm, DenseMatrix, ONE, ZERO};
use crate::simulator::{run, StateVector};
use crate::sparse::{CooMatrix, CscMatrix};

const IDEMPOTENCE_TOL: f64 = 1e-12;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Off-diagonal clock coupling of the post-selection term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PostCoupling {
    /// `−N(p)/√p`, the coupling whose kernel holds the renormalised history
    /// state.
    #[default]
    Exact,
    /// `−N(p)·√p`; reproduces the `−(1/3)(1/√2)` entries printed for the
    /// p = 1/2 gadget families. Kept for side-by-side comparison only: the
    /// history state is not in its kernel.
    SqrtP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompileOptions {
    pub include_input: bool,
    pub include_output: bool,
    pub coupling: PostCoupling,
}

impl CompileOptions {
    /// Propagation terms only.
    pub fn propagation() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermLabel {
    Input,
    /// Gate at clock transition `t − 1 → t`.
    UnitaryProp(usize),
    /// Measurement at clock transition `t − 1 → t`.
    PostProp(usize),
    Output,
}

impl TermLabel {
    pub fn is_propagation(self) -> bool {
        matches!(self, TermLabel::UnitaryProp(_) | TermLabel::PostProp(_))
    }
}

impl fmt::Display for TermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermLabel::Input => f.write_str("input"),
            TermLabel::UnitaryProp(t) => write!(f, "unitary_prop({t})"),
            TermLabel::PostProp(t) => write!(f, "post_prop({t})"),
            TermLabel::Output => f.write_str("output"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Term {
    pub label: TermLabel,
    pub matrix: CscMatrix,
    /// Upper bound on the term's spectral norm.
    pub norm_bound: f64,
}

#[derive(Debug, Clone)]
pub struct ClockHamiltonian {
    dim_sys: usize,
    dim_clock: usize,
    terms: Vec<Term>,
    total: CscMatrix,
}

impl ClockHamiltonian {
    pub fn from_terms(dim_sys: usize, dim_clock: usize, terms: Vec<Term>) -> Self {
        let dim = dim_sys * dim_clock;
        let total = CscMatrix::sum(dim, dim, terms.iter().map(|t| &t.matrix));
        Self {
            dim_sys,
            dim_clock,
            terms,
            total,
        }
    }

    pub fn dim_sys(&self) -> usize {
        self.dim_sys
    }

    pub fn dim_clock(&self) -> usize {
        self.dim_clock
    }

    pub fn dim(&self) -> usize {
        self.dim_sys * self.dim_clock
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn total(&self) -> &CscMatrix {
        &self.total
    }

    /// Sum of the propagation terms alone.
    pub fn propagation(&self) -> CscMatrix {
        CscMatrix::sum(
            self.dim(),
            self.dim(),
            self.terms
                .iter()
                .filter(|t| t.label.is_propagation())
                .map(|t| &t.matrix),
        )
    }

    pub fn sidecar_json(&self) -> serde_json::Value {
        json!({
            "dim_sys": self.dim_sys,
            "dim_clock": self.dim_clock,
            "terms": self.terms.iter().map(|t| json!({
                "label": t.label.to_string(),
                "nnz": t.matrix.nnz(),
                "norm_bound": t.norm_bound,
            })).collect::<Vec<_>>(),
            "index_convention": "clock-fastest",
        })
    }
}

fn clock_operator(dim_clock: usize, entries: &[(usize, usize, f64)]) -> CscMatrix {
    let mut coo = CooMatrix::new(dim_clock, dim_clock);
    for &(a, b, w) in entries {
        coo.push(a, b, re(w));
    }
    coo.to_csc()
}

/// `½(I⊗(|t⟩⟨t| + |t−1⟩⟨t−1|) − U⊗|t⟩⟨t−1| − U†⊗|t−1⟩⟨t|)` for `1 ≤ t < dim_clock`.
pub fn unitary_term(u: &CscMatrix, t: usize, dim_clock: usize) -> Result<CscMatrix> {
    if t == 0 || t >= dim_clock {
        return Err(Error::ClockStepOutOfRange { t, dim_clock });
    }
    let id = CscMatrix::identity(u.rows());
    let diag = id.kron(&clock_operator(
        dim_clock,
        &[(t, t, 0.5), (t - 1, t - 1, 0.5)],
    ));
    let fwd = u.kron(&clock_operator(dim_clock, &[(t, t - 1, -0.5)]));
    let bwd = u
        .adjoint()
        .kron(&clock_operator(dim_clock, &[(t - 1, t, -0.5)]));
    let dim = u.rows() * dim_clock;
    Ok(CscMatrix::sum(dim, dim, [&diag, &fwd, &bwd]))
}

/// `N(p) = p/(p+1)`
pub fn renormalisation_constant(p: f64) -> f64 {
    p / (p + 1.0)
}

/// The two summands of the post-selection term at transition `t → t+1`:
/// the scaled `Π` part and the `(I − Π) ⊗ |t+1⟩⟨t+1|` exclusion part.
pub fn postselection_parts(
    pi: &CscMatrix,
    p: f64,
    t: usize,
    dim_clock: usize,
    coupling: PostCoupling,
) -> Result<(CscMatrix, CscMatrix)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if t + 1 >= dim_clock {
        return Err(Error::ClockStepOutOfRange {
            t: t + 1,
            dim_clock,
        });
    }
    let idem = pi.matmul(pi).max_abs_diff(pi);
    if idem > IDEMPOTENCE_TOL {
        return Err(Error::NotIdempotent(idem));
    }
    let n = renormalisation_constant(p);
    let off = match coupling {
        PostCoupling::Exact => -n / p.sqrt(),
        PostCoupling::SqrtP => -n * p.sqrt(),
    };
    let clock = clock_operator(
        dim_clock,
        &[
            (t, t, n / p),
            (t, t + 1, off),
            (t + 1, t, off),
            (t + 1, t + 1, n),
        ],
    );
    let projector_part = pi.kron(&clock);
    let complement = CscMatrix::identity(pi.rows()).sub(pi);
    let exclusion = complement.kron(&clock_operator(dim_clock, &[(t + 1, t + 1, 1.0)]));
    Ok((projector_part, exclusion))
}

/// Renormalised-projector propagation term for the transition `t → t+1`.
pub fn postselection_term(
    pi: &CscMatrix,
    p: f64,
    t: usize,
    dim_clock: usize,
    coupling: PostCoupling,
) -> Result<CscMatrix> {
    let (a, b) = postselection_parts(pi, p, t, dim_clock, coupling)?;
    Ok(a.add(&b))
}

/// `Σ_i (I − |init_i⟩⟨init_i|)_i ⊗ |0⟩⟨0|` over ancilla qubits.
pub fn input_term(register: &QubitRegister, dim_clock: usize) -> CscMatrix {
    let n = register.n_qubits();
    let dim = register.dim() * dim_clock;
    let clock0 = clock_operator(dim_clock, &[(0, 0, 1.0)]);
    let parts: Vec<CscMatrix> = register
        .ancillas()
        .map(|(q, role)| {
            let init = role.initial_state().expect("ancilla has an initial state");
            let mut penalty = DenseMatrix::identity(2);
            for a in 0..2 {
                for b in 0..2 {
                    penalty[(a, b)] -= init[a] * init[b].conj();
                }
            }
            embed(&penalty, &[q], n).kron(&clock0)
        })
        .collect();
    CscMatrix::sum(dim, dim, &parts)
}

/// `|0⟩⟨0|_{q_out} ⊗ |T⟩⟨T|` with `T = dim_clock − 1`.
pub fn output_term(q_out: usize, n_qubits: usize, dim_clock: usize) -> CscMatrix {
    let zero = DenseMatrix::from_row_major(2, 2, vec![ONE, ZERO, ZERO, ZERO]);
    let last = dim_clock - 1;
    embed(&zero, &[q_out], n_qubits).kron(&clock_operator(dim_clock, &[(last, last, 1.0)]))
}

/// Builds the clock Hamiltonian. Every measurement must carry a declared
/// (certified) post-selection probability.
pub fn compile(c: &Circuit, opts: &CompileOptions) -> Result<ClockHamiltonian> {
    let report = c.validate();
    if !report.is_valid() {
        return Err(Error::InvalidCircuit(report.to_string()));
    }
    let n = c.n_qubits();
    let dim_clock = c.dim_clock();
    let mut probs = Vec::with_capacity(c.n_steps());
    for (i, step) in c.steps.iter().enumerate() {
        probs.push(match step {
            Step::Gate(_) => None,
            Step::Measure(m) => Some(
                m.declared_prob
                    .ok_or(Error::TamenessRequired(i + 1))?
                    .value(),
            ),
        });
    }
    let output = if opts.include_output {
        Some(c.output_qubit.ok_or(Error::MissingOutputQubit)?)
    } else {
        None
    };

    let propagation: Vec<Term> = c
        .steps
        .par_iter()
        .zip(&probs)
        .enumerate()
        .map(|(i, (step, prob))| {
            let t = i + 1;
            let op = step.operator(n);
            match (step, prob) {
                (Step::Gate(_), _) => Ok(Term {
                    label: TermLabel::UnitaryProp(t),
                    matrix: unitary_term(&op, t, dim_clock)?,
                    norm_bound: 1.0,
                }),
                (Step::Measure(_), Some(p)) => {
                    let matrix = postselection_term(&op, *p, t - 1, dim_clock, opts.coupling)?;
                    let norm_bound = match opts.coupling {
                        PostCoupling::Exact => {
                            1f64.max(renormalisation_constant(*p) * (1.0 + 1.0 / p))
                        }
                        PostCoupling::SqrtP => matrix.gershgorin_bound(),
                    };
                    Ok(Term {
                        label: TermLabel::PostProp(t),
                        matrix,
                        norm_bound,
                    })
                }
                (Step::Measure(_), None) => Err(Error::TamenessRequired(t)),
            }
        })
        .collect::<Result<_>>()?;

    let mut terms = Vec::with_capacity(propagation.len() + 2);
    if opts.include_input {
        terms.push(Term {
            label: TermLabel::Input,
            matrix: input_term(&c.register, dim_clock),
            norm_bound: c.register.ancillas().count() as f64,
        });
    }
    terms.extend(propagation);
    if let Some(q) = output {
        terms.push(Term {
            label: TermLabel::Output,
            matrix: output_term(q, n, dim_clock),
            norm_bound: 1.0,
        });
    }
    Ok(ClockHamiltonian::from_terms(c.dim_sys(), dim_clock, terms))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    pub vector: Vec<C64>,
    pub normalized: bool,
}

/// `Σ_t |ψ_t⟩ ⊗ |t⟩` over the renormalised trajectory of `proof`.
pub fn history_state(c: &Circuit, proof: &StateVector, normalized: bool) -> Result<HistoryState> {
    let trajectory = run(c, proof)?;
    let dim_clock = c.dim_clock();
    let mut vector = vec![ZERO; c.dim_sys() * dim_clock];
    for (t, state) in trajectory.states.iter().enumerate() {
        for (s, &amp) in state.amplitudes().iter().enumerate() {
            vector[s * dim_clock + t] = amp;
        }
    }
    if normalized {
        let nrm = norm(&vector);
        vector.iter_mut().for_each(|x| *x /= nrm);
    }
    Ok(HistoryState { vector, normalized })
}

/// `W = Σ_j U_j⋯U_1 ⊗ |j⟩⟨j|` for a unitary-only circuit.
pub fn w_operator(c: &Circuit) -> Result<CscMatrix> {
    if let Some((i, _)) = c.measurements().next() {
        return Err(Error::NonUnitaryCircuit(i + 1));
    }
    let dim_clock = c.dim_clock();
    let mut cumulative = CscMatrix::identity(c.dim_sys());
    let mut blocks = Vec::with_capacity(dim_clock);
    for j in 0..dim_clock {
        if j > 0 {
            cumulative = c.steps[j - 1].operator(c.n_qubits()).matmul(&cumulative);
        }
        blocks.push(cumulative.kron(&clock_operator(dim_clock, &[(j, j, 1.0)])));
    }
    let dim = c.dim_sys() * dim_clock;
    Ok(CscMatrix::sum(dim, dim, &blocks))
}

/// `W†HW`, term by term.
pub fn conjugate_by_w(h: &ClockHamiltonian, c: &Circuit) -> Result<ClockHamiltonian> {
    let w = w_operator(c)?;
    if w.rows() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            actual: w.rows(),
        });
    }
    let w_adj = w.adjoint();
    let terms = h
        .terms
        .iter()
        .map(|t| Term {
            label: t.label,
            matrix: w_adj.matmul(&t.matrix).matmul(&w),
            norm_bound: t.norm_bound,
        })
        .collect();
    Ok(ClockHamiltonian::from_terms(h.dim_sys, h.dim_clock, terms))
}

#[cfg(test)]
#[allow(clippy::identity_op)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, Gate, Outcome};

    fn gadget() -> Circuit {
        parse_circuit(
            "qubits 2\nroles proof:0 plus:1\nstep gate CZ 0 1\nstep measure X 0 keep + prob 1/2",
        )
        .unwrap()
    }

    fn idempotence(m: &CscMatrix) -> f64 {
        m.matmul(m).max_abs_diff(m)
    }

    #[test]
    fn identity_unitary_term() {
        let m = unitary_term(&CscMatrix::identity(2), 1, 2)
            .unwrap()
            .to_dense();
        let expected = DenseMatrix::from_real(
            4,
            4,
            &[
                0.5, -0.5, 0.0, 0.0, //
                -0.5, 0.5, 0.0, 0.0, //
                0.0, 0.0, 0.5, -0.5, //
                0.0, 0.0, -0.5, 0.5,
            ],
        );
        assert!(m.max_abs_diff(&expected) < 1e-15);
        assert!(matches!(
            unitary_term(&CscMatrix::identity(2), 0, 2),
            Err(Error::ClockStepOutOfRange { .. })
        ));
        assert!(unitary_term(&CscMatrix::identity(2), 2, 2).is_err());
    }

    #[test]
    fn hadamard_unitary_term_is_projector() {
        let h = embed(&Gate::H.matrix(), &[0], 1);
        let m = unitary_term(&h, 1, 3).unwrap();
        assert!(idempotence(&m) < 1e-12);
        assert!(m.hermiticity_residual() < 1e-15);
    }

    #[test]
    fn post_term_at_half_has_printed_diagonal() {
        let pi = embed(&Outcome::Plus.projector(), &[0], 1);
        let (a, _) = postselection_parts(&pi, 0.5, 1, 3, PostCoupling::Exact).unwrap();
        // Π = |+⟩⟨+| has ½ entries; the clock diagonal coefficient is 2/3 = (1/3)·2.
        let idx = |s: usize, t: usize| s * 3 + t;
        assert!((a.get(idx(0, 1), idx(0, 1)).re - 0.5 * 2.0 / 3.0).abs() < 1e-15);
        assert!((a.get(idx(0, 2), idx(0, 2)).re - 0.5 / 3.0).abs() < 1e-15);
        assert!((a.get(idx(0, 1), idx(0, 2)).re + 0.5 * 2f64.sqrt() / 3.0).abs() < 1e-15);
        assert!(idempotence(&a) < 1e-12);
        let (lit, _) = postselection_parts(&pi, 0.5, 1, 3, PostCoupling::SqrtP).unwrap();
        assert!((lit.get(idx(0, 1), idx(0, 2)).re + 0.5 / (3.0 * 2f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn post_term_degenerates_to_identity_propagation() {
        let id = CscMatrix::identity(4);
        let post = postselection_term(&id, 1.0, 2, 4, PostCoupling::Exact).unwrap();
        let unit = unitary_term(&id, 3, 4).unwrap();
        assert!(post.max_abs_diff(&unit) < 1e-12);
    }

    #[test]
    fn post_term_errors() {
        let id = CscMatrix::identity(2);
        assert!(matches!(
            postselection_term(&id, 0.0, 0, 2, PostCoupling::Exact),
            Err(Error::ProbabilityOutOfRange(_))
        ));
        assert!(postselection_term(&id, 1.5, 0, 2, PostCoupling::Exact).is_err());
        let not_proj = id.scale(re(2.0));
        assert!(matches!(
            postselection_term(&not_proj, 0.5, 0, 2, PostCoupling::Exact),
            Err(Error::NotIdempotent(_))
        ));
        assert!(postselection_term(&id, 0.5, 1, 2, PostCoupling::Exact).is_err());
    }

    #[test]
    fn gadget_two_step_history_is_annihilated() {
        // |v⟩|t⟩ + √2·Π|v⟩|t+1⟩ for v = CZ|ψ⟩|+⟩ with a non-trivial ψ.
        let pi = embed(&Outcome::Plus.projector(), &[0], 2);
        let term = postselection_term(&pi, 0.5, 0, 2, PostCoupling::Exact).unwrap();
        let psi = StateVector::from_spec("[[0.6, 0.0], [0.0, 0.8]]").unwrap();
        let v = crate::simulator::initial_state(&gadget().register, &psi).unwrap();
        let v = embed(&Gate::Cz.matrix(), &[0, 1], 2).matvec(v.amplitudes());
        let pv = pi.matvec(&v);
        let mut eta = vec![ZERO; 8];
        for s in 0..4 {
            eta[s * 2] = v[s];
            eta[s * 2 + 1] = pv[s] * 2f64.sqrt();
        }
        assert!(norm(&term.matvec(&eta)) < 1e-12);
    }

    #[test]
    fn input_term_penalizes_wrong_ancilla() {
        let c = parse_circuit("qubits 2\nroles proof:0 zero:1").unwrap();
        let h = input_term(&c.register, 2);
        let psi = StateVector::from_spec("[[0.6, 0.0], [0.0, 0.8]]").unwrap();
        let ok = crate::simulator::initial_state(&c.register, &psi).unwrap();
        let mut good = vec![ZERO; 8];
        let mut bad = vec![ZERO; 8];
        for s in 0..4 {
            good[s * 2] = ok.amplitudes()[s];
        }
        // |ψ⟩|1⟩ ⊗ |0⟩_clock
        bad[1 * 2] = re(0.6);
        bad[3 * 2] = C64::new(0.0, 0.8);
        assert!(norm(&h.matvec(&good)) < 1e-15);
        let energy: C64 = bad
            .iter()
            .zip(h.matvec(&bad))
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((energy.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn output_term_is_projector_and_accepts_one() {
        let m = output_term(1, 2, 3);
        assert!(idempotence(&m) < 1e-15);
        // |01⟩ ⊗ |2⟩ has zero energy, |00⟩ ⊗ |2⟩ energy one
        assert_eq!(m.get(1 * 3 + 2, 1 * 3 + 2), ZERO);
        assert_eq!(m.get(2, 2), ONE);
    }

    #[test]
    fn compile_gadget_structure() {
        let h = compile(&gadget(), &CompileOptions::propagation()).unwrap();
        let labels: Vec<_> = h.terms().iter().map(|t| t.label).collect();
        assert_eq!(
            labels,
            vec![TermLabel::UnitaryProp(1), TermLabel::PostProp(2)]
        );
        assert_eq!((h.dim_sys(), h.dim_clock()), (4, 3));
        for t in h.terms() {
            assert!(t.matrix.hermiticity_residual() < 1e-15);
        }
    }

    #[test]
    fn compile_requires_probabilities_and_output() {
        let c = parse_circuit(
            "qubits 2\nroles proof:0 plus:1\nstep gate CZ 0 1\nstep measure X 0 keep +",
        )
        .unwrap();
        assert!(matches!(
            compile(&c, &CompileOptions::propagation()),
            Err(Error::TamenessRequired(2))
        ));
        let opts = CompileOptions {
            include_output: true,
            ..CompileOptions::default()
        };
        assert!(matches!(
            compile(&gadget(), &opts),
            Err(Error::MissingOutputQubit)
        ));
    }

    #[test]
    fn history_state_of_empty_circuit() {
        let c = parse_circuit("qubits 1\nroles proof:0").unwrap();
        let psi = StateVector::from_label("+").unwrap();
        let eta = history_state(&c, &psi, true).unwrap();
        assert_eq!(eta.vector, psi.amplitudes());
    }

    #[test]
    fn gadget_history_in_kernel() {
        let c = gadget();
        let h = compile(&c, &CompileOptions::propagation()).unwrap();
        let eta = history_state(&c, &StateVector::zero(1), false).unwrap();
        assert!(norm(&h.total().matvec(&eta.vector)) < 1e-12);
    }

    #[test]
    fn w_rejects_measurements() {
        assert!(matches!(
            w_operator(&gadget()),
            Err(Error::NonUnitaryCircuit(2))
        ));
        let id = parse_circuit("qubits 1\nroles proof:0\nstep gate X 0\nstep gate X 0").unwrap();
        assert!(w_operator(&id).is_ok());
    }
}
