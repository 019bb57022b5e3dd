//! Circuit data model and the line-oriented circuit description language.
//!
//! ```text
//! qubits 2
//! roles proof:0 plus:1
//! output 1
//! step gate CZ 0 1
//! step measure X 0 keep + prob 1/2
//! ```
//!
//! Qubit 0 is the most significant bit of a basis index, so the basis label
//! `01` means qubit 0 in `|0⟩` and qubit 1 in `|1⟩`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::{self, Write as _};
use std::ops::Range;

use num_complex::Complex64 as C64;

use crate::error::{ParseError, ParseErrorKind};
use crate::linalg::{DenseMatrix, ONE, ZERO};
use crate::sparse::{CooMatrix, CscMatrix};

/// Tolerance on `‖U†U − I‖_max` for explicit gate matrices.
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Proof,
    Zero,
    Plus,
}

impl Role {
    fn keyword(self) -> &'static str {
        match self {
            Role::Proof => "proof",
            Role::Zero => "zero",
            Role::Plus => "plus",
        }
    }

    /// Initial single-qubit state of an ancilla role.
    pub fn initial_state(self) -> Option<[C64; 2]> {
        match self {
            Role::Proof => None,
            Role::Zero => Some([ONE, ZERO]),
            Role::Plus => Some([C64::new(FRAC_1_SQRT_2, 0.0); 2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitRegister {
    roles: Vec<Role>,
}

impl QubitRegister {
    pub fn new(roles: Vec<Role>) -> Self {
        Self { roles }
    }

    pub fn all_zero(n_qubits: usize) -> Self {
        Self::new(vec![Role::Zero; n_qubits])
    }

    pub fn n_qubits(&self) -> usize {
        self.roles.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.roles.len()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, q: usize) -> Role {
        self.roles[q]
    }

    pub fn proof_qubits(&self) -> Vec<usize> {
        (0..self.n_qubits())
            .filter(|&q| self.roles[q] == Role::Proof)
            .collect()
    }

    pub fn ancillas(&self) -> impl Iterator<Item = (usize, Role)> + '_ {
        self.roles
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, r)| *r != Role::Proof)
    }

    /// The proof qubits as a range, or `None` if there are none or they are
    /// not contiguous.
    pub fn proof_block(&self) -> Option<Range<usize>> {
        let proof = self.proof_qubits();
        let (&first, &last) = (proof.first()?, proof.last()?);
        (last - first + 1 == proof.len()).then_some(first..last + 1)
    }

    pub fn n_proof(&self) -> usize {
        self.proof_qubits().len()
    }

    fn runs(&self) -> Vec<(Role, usize, usize)> {
        let mut runs: Vec<(Role, usize, usize)> = Vec::new();
        for (q, &role) in self.roles.iter().enumerate() {
            match runs.last_mut() {
                Some((r, _, end)) if *r == role && *end + 1 == q => *end = q,
                _ => runs.push((role, q, q)),
            }
        }
        runs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H,
    X,
    Z,
    S,
    Cz,
    Cnot,
    /// Explicit 2×2 or 4×4 matrix; the first target is the high bit.
    Matrix(DenseMatrix),
}

impl Gate {
    pub fn from_name(name: &str) -> Option<Gate> {
        Some(match name.to_ascii_uppercase().as_str() {
            "H" => Gate::H,
            "X" => Gate::X,
            "Z" => Gate::Z,
            "S" => Gate::S,
            "CZ" => Gate::Cz,
            "CNOT" | "CX" => Gate::Cnot,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H => "H",
            Gate::X => "X",
            Gate::Z => "Z",
            Gate::S => "S",
            Gate::Cz => "CZ",
            Gate::Cnot => "CNOT",
            Gate::Matrix(m) if m.rows() == 2 => "matrix2",
            Gate::Matrix(_) => "matrix4",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Gate::H | Gate::X | Gate::Z | Gate::S => 1,
            Gate::Cz | Gate::Cnot => 2,
            Gate::Matrix(m) => {
                if m.rows() == 2 {
                    1
                } else {
                    2
                }
            }
        }
    }

    pub fn matrix(&self) -> DenseMatrix {
        let h = FRAC_1_SQRT_2;
        match self {
            Gate::H => DenseMatrix::from_real(2, 2, &[h, h, h, -h]),
            Gate::X => DenseMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            Gate::Z => DenseMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            Gate::S => DenseMatrix::from_row_major(2, 2, vec![ONE, ZERO, ZERO, C64::new(0.0, 1.0)]),
            Gate::Cz => {
                let mut m = DenseMatrix::identity(4);
                m[(3, 3)] = -ONE;
                m
            }
            Gate::Cnot => DenseMatrix::from_real(
                4,
                4,
                &[
                    1.0, 0.0, 0.0, 0.0, //
                    0.0, 1.0, 0.0, 0.0, //
                    0.0, 0.0, 0.0, 1.0, //
                    0.0, 0.0, 1.0, 0.0,
                ],
            ),
            Gate::Matrix(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateStep {
    pub gate: Gate,
    pub targets: Vec<usize>,
}

impl GateStep {
    pub fn new(gate: Gate, targets: &[usize]) -> Self {
        Self {
            gate,
            targets: targets.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Plus,
    Minus,
    Zero,
    One,
}

impl Outcome {
    fn symbol(self) -> &'static str {
        match self {
            Outcome::Plus => "+",
            Outcome::Minus => "-",
            Outcome::Zero => "0",
            Outcome::One => "1",
        }
    }

    fn parse(s: &str) -> Option<Outcome> {
        Some(match s {
            "+" => Outcome::Plus,
            "-" => Outcome::Minus,
            "0" => Outcome::Zero,
            "1" => Outcome::One,
            _ => return None,
        })
    }

    pub fn basis(self) -> Basis {
        match self {
            Outcome::Plus | Outcome::Minus => Basis::X,
            Outcome::Zero | Outcome::One => Basis::Z,
        }
    }

    /// The kept single-qubit state `|keep⟩`.
    pub fn state(self) -> [C64; 2] {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            Outcome::Plus => [h, h],
            Outcome::Minus => [h, -h],
            Outcome::Zero => [ONE, ZERO],
            Outcome::One => [ZERO, ONE],
        }
    }

    /// `|keep⟩⟨keep|`
    pub fn projector(self) -> DenseMatrix {
        let s = self.state();
        let mut m = DenseMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = s[i] * s[j].conj();
            }
        }
        m
    }
}

/// A declared post-selection probability, kept in the form it was written.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probability {
    Ratio { num: u64, den: u64 },
    Real(f64),
}

impl Probability {
    pub fn value(&self) -> f64 {
        match *self {
            Probability::Ratio { num, den } => num as f64 / den as f64,
            Probability::Real(p) => p,
        }
    }

    pub fn is_valid(&self) -> bool {
        let p = self.value();
        p > 0.0 && p <= 1.0
    }

    fn parse(s: &str) -> Option<Probability> {
        if let Some((num, den)) = s.split_once('/') {
            let num = num.trim().parse().ok()?;
            let den: u64 = den.trim().parse().ok()?;
            (den != 0).then_some(Probability::Ratio { num, den })
        } else {
            s.parse::<f64>()
                .ok()
                .filter(|p| p.is_finite())
                .map(Probability::Real)
        }
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Probability::Ratio { num, den } => write!(f, "{num}/{den}"),
            Probability::Real(p) => f.write_str(&format_real(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureStep {
    pub basis: Basis,
    pub target: usize,
    pub keep: Outcome,
    pub declared_prob: Option<Probability>,
}

impl MeasureStep {
    pub fn new(basis: Basis, target: usize, keep: Outcome) -> Self {
        Self {
            basis,
            target,
            keep,
            declared_prob: None,
        }
    }

    pub fn with_prob(mut self, prob: Probability) -> Self {
        self.declared_prob = Some(prob);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Gate(GateStep),
    Measure(MeasureStep),
}

impl Step {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Step::Gate(g) => g.targets.clone(),
            Step::Measure(m) => vec![m.target],
        }
    }

    /// The step's action on the full register: the embedded unitary for a
    /// gate, the embedded projector `|keep⟩⟨keep|` for a measurement.
    pub fn operator(&self, n_qubits: usize) -> CscMatrix {
        match self {
            Step::Gate(g) => embed(&g.gate.matrix(), &g.targets, n_qubits),
            Step::Measure(m) => embed(&m.keep.projector(), &[m.target], n_qubits),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub name: String,
    pub register: QubitRegister,
    pub steps: Vec<Step>,
    pub output_qubit: Option<usize>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, register: QubitRegister) -> Self {
        Self {
            name: name.into(),
            register,
            steps: Vec::new(),
            output_qubit: None,
        }
    }

    pub fn gate(mut self, gate: Gate, targets: &[usize]) -> Self {
        self.steps.push(Step::Gate(GateStep::new(gate, targets)));
        self
    }

    pub fn measure(mut self, step: MeasureStep) -> Self {
        self.steps.push(Step::Measure(step));
        self
    }

    pub fn n_qubits(&self) -> usize {
        self.register.n_qubits()
    }

    /// Number of steps `T`; the clock has dimension `T + 1`.
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn dim_sys(&self) -> usize {
        self.register.dim()
    }

    pub fn dim_clock(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn measurements(&self) -> impl Iterator<Item = (usize, &MeasureStep)> {
        self.steps.iter().enumerate().filter_map(|(i, s)| match s {
            Step::Measure(m) => Some((i, m)),
            Step::Gate(_) => None,
        })
    }

    pub fn is_unitary(&self) -> bool {
        self.measurements().next().is_none()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Canonical text form; `parse_circuit(&c.to_text())` reproduces `c`.
    pub fn to_text(&self) -> String {
        serialize(self)
    }
}

/// Embeds a `2^k × 2^k` local operator acting on `targets` (first target is
/// the high bit) into the full `n_qubits` register.
pub fn embed(local: &DenseMatrix, targets: &[usize], n_qubits: usize) -> CscMatrix {
    let k = targets.len();
    assert_eq!(
        local.rows(),
        1 << k,
        "local operator size does not match targets"
    );
    let dim = 1usize << n_qubits;
    let masks: Vec<usize> = targets.iter().map(|&q| 1 << (n_qubits - 1 - q)).collect();
    let all_mask: usize = masks.iter().sum();
    let local_index = |full: usize| {
        masks
            .iter()
            .fold(0usize, |acc, &m| (acc << 1) | usize::from(full & m != 0))
    };
    let full_index = |base: usize, local: usize| {
        masks.iter().enumerate().fold(base, |acc, (i, &m)| {
            if local >> (k - 1 - i) & 1 == 1 {
                acc | m
            } else {
                acc
            }
        })
    };
    let mut coo = CooMatrix::with_capacity(dim, dim, dim * (1 << k));
    for col in 0..dim {
        let lc = local_index(col);
        let base = col & !all_mask;
        for lr in 0..(1 << k) {
            let v = local[(lr, lc)];
            if v != ZERO {
                coo.push(full_index(base, lr), col, v);
            }
        }
    }
    coo.to_csc()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    /// 1-based step index, if the issue belongs to a step.
    pub step: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, step: Option<usize>, message: String) {
        self.issues.push(Issue { step, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return f.write_str("valid");
        }
        let msgs: Vec<_> = self.issues.iter().map(|i| i.message.as_str()).collect();
        f.write_str(&msgs.join("; "))
    }
}

pub fn validate(c: &Circuit) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = c.n_qubits();
    if n == 0 {
        report.push(None, "register has no qubits".into());
    }
    if c.register.n_proof() > 0 && c.register.proof_block().is_none() {
        report.push(None, "proof qubits are not contiguous".into());
    }
    if let Some(q) = c.output_qubit {
        if q >= n {
            report.push(None, format!("output qubit {q} out of range"));
        }
    }
    for (i, step) in c.steps.iter().enumerate() {
        let k = i + 1;
        let qubits = step.qubits();
        for &q in &qubits {
            if q >= n {
                report.push(Some(k), format!("qubit {q} out of range at step {k}"));
            }
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            report.push(Some(k), format!("duplicate targets at step {k}"));
        }
        match step {
            Step::Gate(g) => {
                if let Gate::Matrix(m) = &g.gate {
                    if !(m.is_square() && (m.rows() == 2 || m.rows() == 4)) {
                        report.push(
                            Some(k),
                            format!("explicit matrix at step {k} must be 2x2 or 4x4"),
                        );
                    } else if m.unitarity_residual() > UNITARITY_TOL {
                        report.push(Some(k), format!("non-unitary gate at step {k}"));
                    }
                }
                if g.targets.len() != g.gate.arity() {
                    report.push(
                        Some(k),
                        format!(
                            "gate {} at step {k} expects {} targets, got {}",
                            g.gate.name(),
                            g.gate.arity(),
                            g.targets.len()
                        ),
                    );
                }
            }
            Step::Measure(m) => {
                if m.keep.basis() != m.basis {
                    report.push(
                        Some(k),
                        format!(
                            "outcome {} is not in the measured basis at step {k}",
                            m.keep.symbol()
                        ),
                    );
                }
                if let Some(p) = m.declared_prob {
                    if !p.is_valid() {
                        report.push(
                            Some(k),
                            format!("declared probability {p} outside (0, 1] at step {k}"),
                        );
                    }
                }
            }
        }
    }
    report
}

/// Formats a real with 17 significant digits so that it parses back exactly.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    if !c.name.is_empty() {
        let _ = writeln!(out, "name {}", c.name);
    }
    let _ = writeln!(out, "qubits {}", c.n_qubits());
    let runs = c.register.runs();
    if !runs.is_empty() {
        out.push_str("roles");
        for (role, a, b) in runs {
            if a == b {
                let _ = write!(out, " {}:{a}", role.keyword());
            } else {
                let _ = write!(out, " {}:{a}..{b}", role.keyword());
            }
        }
        out.push('\n');
    }
    if let Some(q) = c.output_qubit {
        let _ = writeln!(out, "output {q}");
    }
    for step in &c.steps {
        match step {
            Step::Gate(g) => {
                out.push_str("step gate ");
                out.push_str(g.gate.name());
                if let Gate::Matrix(m) = &g.gate {
                    for z in m.as_slice() {
                        let _ = write!(out, " {} {}", format_real(z.re), format_real(z.im));
                    }
                }
                for q in &g.targets {
                    let _ = write!(out, " {q}");
                }
            }
            Step::Measure(m) => {
                let basis = match m.basis {
                    Basis::X => "X",
                    Basis::Z => "Z",
                };
                let _ = write!(
                    out,
                    "step measure {basis} {} keep {}",
                    m.target,
                    m.keep.symbol()
                );
                if let Some(p) = m.declared_prob {
                    let _ = write!(out, " prob {p}");
                }
            }
        }
        out.push('\n');
    }
    out
}

struct Line<'a> {
    number: usize,
    tokens: Vec<(usize, &'a str)>,
    end_column: usize,
}

impl<'a> Line<'a> {
    fn new(number: usize, text: &'a str) -> Self {
        let content = text.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start: Option<usize> = None;
        for (i, ch) in content.char_indices() {
            match (ch.is_whitespace(), start) {
                (true, Some(s)) => {
                    tokens.push((s, &content[s..i]));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            tokens.push((s, &content[s..]));
        }
        let tokens = tokens
            .into_iter()
            .map(|(byte, tok)| (content[..byte].chars().count() + 1, tok))
            .collect();
        Self {
            number,
            tokens,
            end_column: content.chars().count() + 1,
        }
    }

    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.number,
            column,
            kind,
        }
    }

    fn token(&self, i: usize, what: &str) -> Result<(usize, &'a str), ParseError> {
        self.tokens.get(i).copied().ok_or_else(|| {
            self.err(
                self.end_column,
                ParseErrorKind::Syntax(format!("expected {what}")),
            )
        })
    }

    fn usize_at(&self, i: usize, what: &str) -> Result<usize, ParseError> {
        let (col, tok) = self.token(i, what)?;
        tok.parse().map_err(|_| {
            self.err(
                col,
                ParseErrorKind::Syntax(format!("expected {what}, found `{tok}`")),
            )
        })
    }

    fn qubit_at(&self, i: usize, n_qubits: usize) -> Result<usize, ParseError> {
        let q = self.usize_at(i, "qubit index")?;
        if q >= n_qubits {
            let col = self.tokens[i].0;
            return Err(self.err(col, ParseErrorKind::QubitOutOfRange { qubit: q, n_qubits }));
        }
        Ok(q)
    }

    fn real_at(&self, i: usize) -> Result<f64, ParseError> {
        let (col, tok) = self.token(i, "real number")?;
        tok.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| {
                self.err(
                    col,
                    ParseErrorKind::Syntax(format!("expected real number, found `{tok}`")),
                )
            })
    }

    fn expect_end(&self, i: usize) -> Result<(), ParseError> {
        match self.tokens.get(i) {
            None => Ok(()),
            Some(&(col, tok)) => {
                Err(self.err(col, ParseErrorKind::Syntax(format!("unexpected `{tok}`"))))
            }
        }
    }
}

fn parse_range(tok: &str) -> Option<(usize, usize)> {
    match tok.split_once("..") {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => {
            let q = tok.parse().ok()?;
            Some((q, q))
        }
    }
}

/// Parses and validates a circuit description.
pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut name = String::new();
    let mut n_qubits: Option<usize> = None;
    let mut roles: Vec<Role> = Vec::new();
    let mut role_set: Vec<bool> = Vec::new();
    let mut output_qubit = None;
    let mut steps = Vec::new();
    let mut step_lines = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = Line::new(idx + 1, raw);
        let Some(&(col, keyword)) = line.tokens.first() else {
            continue;
        };
        let need_qubits = |n: Option<usize>| {
            n.ok_or_else(|| {
                line.err(
                    col,
                    ParseErrorKind::Syntax("`qubits` must come first".into()),
                )
            })
        };
        match keyword {
            "name" => {
                let rest: Vec<&str> = line.tokens[1..].iter().map(|&(_, t)| t).collect();
                name = rest.join(" ");
            }
            "qubits" => {
                if n_qubits.is_some() {
                    return Err(line.err(
                        col,
                        ParseErrorKind::Syntax("duplicate `qubits` line".into()),
                    ));
                }
                let n = line.usize_at(1, "qubit count")?;
                if n == 0 {
                    return Err(line.err(
                        line.tokens[1].0,
                        ParseErrorKind::Syntax("qubit count must be positive".into()),
                    ));
                }
                line.expect_end(2)?;
                n_qubits = Some(n);
                roles = vec![Role::Zero; n];
                role_set = vec![false; n];
            }
            "roles" => {
                let n = need_qubits(n_qubits)?;
                for &(tcol, tok) in &line.tokens[1..] {
                    let bad = || {
                        line.err(
                            tcol,
                            ParseErrorKind::Syntax(format!("malformed role `{tok}`")),
                        )
                    };
                    let (kw, range) = tok.split_once(':').ok_or_else(bad)?;
                    let role = match kw {
                        "proof" => Role::Proof,
                        "zero" => Role::Zero,
                        "plus" => Role::Plus,
                        _ => return Err(bad()),
                    };
                    let (a, b) = parse_range(range).filter(|(a, b)| a <= b).ok_or_else(bad)?;
                    if b >= n {
                        return Err(line.err(
                            tcol,
                            ParseErrorKind::QubitOutOfRange {
                                qubit: b,
                                n_qubits: n,
                            },
                        ));
                    }
                    for q in a..=b {
                        if role_set[q] {
                            return Err(line.err(
                                tcol,
                                ParseErrorKind::Syntax(format!("qubit {q} assigned two roles")),
                            ));
                        }
                        role_set[q] = true;
                        roles[q] = role;
                    }
                }
            }
            "output" => {
                let n = need_qubits(n_qubits)?;
                output_qubit = Some(line.qubit_at(1, n)?);
                line.expect_end(2)?;
            }
            "step" => {
                let n = need_qubits(n_qubits)?;
                let (kcol, kind) = line.token(1, "`gate` or `measure`")?;
                let step = match kind {
                    "gate" => parse_gate(&line, n)?,
                    "measure" => parse_measure(&line, n)?,
                    other => {
                        return Err(line.err(
                            kcol,
                            ParseErrorKind::Syntax(format!("unknown step kind `{other}`")),
                        ))
                    }
                };
                steps.push(step);
                step_lines.push(line.number);
            }
            other => {
                return Err(line.err(
                    col,
                    ParseErrorKind::Syntax(format!("unknown directive `{other}`")),
                ));
            }
        }
    }

    if n_qubits.is_none() {
        return Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::Syntax("missing `qubits` line".into()),
        });
    }
    let circuit = Circuit {
        name,
        register: QubitRegister::new(roles),
        steps,
        output_qubit,
    };
    let report = validate(&circuit);
    if let Some(issue) = report.issues.first() {
        let line = issue.step.map_or(1, |k| step_lines[k - 1]);
        return Err(ParseError {
            line,
            column: 1,
            kind: ParseErrorKind::Invalid(issue.message.clone()),
        });
    }
    Ok(circuit)
}

fn parse_gate(line: &Line<'_>, n: usize) -> Result<Step, ParseError> {
    let (gcol, name) = line.token(2, "gate name")?;
    let (gate, next) = match name {
        "matrix2" | "matrix4" => {
            let dim = if name == "matrix2" { 2 } else { 4 };
            let entries = (0..dim * dim)
                .map(|i| Ok(C64::new(line.real_at(3 + 2 * i)?, line.real_at(4 + 2 * i)?)))
                .collect::<Result<Vec<_>, ParseError>>()?;
            (
                Gate::Matrix(DenseMatrix::from_row_major(dim, dim, entries)),
                3 + 2 * dim * dim,
            )
        }
        _ => {
            let gate = Gate::from_name(name)
                .ok_or_else(|| line.err(gcol, ParseErrorKind::UnknownGate(name.to_string())))?;
            (gate, 3)
        }
    };
    let targets = (0..gate.arity())
        .map(|i| line.qubit_at(next + i, n))
        .collect::<Result<Vec<_>, _>>()?;
    if targets.len() == 2 && targets[0] == targets[1] {
        return Err(line.err(
            line.tokens[next + 1].0,
            ParseErrorKind::DuplicateTargets(targets[0]),
        ));
    }
    line.expect_end(next + targets.len())?;
    Ok(Step::Gate(GateStep { gate, targets }))
}

fn parse_measure(line: &Line<'_>, n: usize) -> Result<Step, ParseError> {
    let (bcol, basis) = line.token(2, "measurement basis")?;
    let basis = match basis {
        "X" | "x" => Basis::X,
        "Z" | "z" => Basis::Z,
        other => {
            return Err(line.err(
                bcol,
                ParseErrorKind::Syntax(format!("unknown basis `{other}`")),
            ))
        }
    };
    let target = line.qubit_at(3, n)?;
    let (kcol, kw) = line.token(4, "`keep`")?;
    if kw != "keep" {
        return Err(line.err(
            kcol,
            ParseErrorKind::Syntax(format!("expected `keep`, found `{kw}`")),
        ));
    }
    let (ocol, out) = line.token(5, "outcome")?;
    let keep = Outcome::parse(out)
        .filter(|o| o.basis() == basis)
        .ok_or_else(|| {
            line.err(
                ocol,
                ParseErrorKind::Syntax(format!("outcome `{out}` not valid for this basis")),
            )
        })?;
    let mut step = MeasureStep::new(basis, target, keep);
    if let Some(&(pcol, kw)) = line.tokens.get(6) {
        if kw != "prob" {
            return Err(line.err(
                pcol,
                ParseErrorKind::Syntax(format!("expected `prob`, found `{kw}`")),
            ));
        }
        let (vcol, val) = line.token(7, "probability")?;
        let p = Probability::parse(val).ok_or_else(|| {
            line.err(
                vcol,
                ParseErrorKind::Syntax(format!("malformed probability `{val}`")),
            )
        })?;
        if !p.is_valid() {
            return Err(line.err(vcol, ParseErrorKind::ProbabilityOutOfRange(val.to_string())));
        }
        step.declared_prob = Some(p);
        line.expect_end(8)?;
    }
    Ok(Step::Measure(step))
}
