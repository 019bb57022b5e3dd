//! Generators for the Hadamard gadget and the two gadget-based benchmark
//! families.

use std::fmt;
use std::str::FromStr;

use crate::circuit::{
    Basis, Circuit, Gate, MeasureStep, Outcome, Probability, QubitRegister, Role,
};
use crate::error::{Error, Result};

const HALF: Probability = Probability::Ratio { num: 1, den: 2 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `n` cascaded Hadamard gadgets teleporting the proof along `n + 1`
    /// qubits.
    F1,
    /// `n` rounds of two gadgets on a recycled qubit pair, each round
    /// acting as the identity.
    F2,
}

impl Family {
    pub fn circuit(self, n: usize) -> Result<Circuit> {
        match self {
            Family::F1 => family_f1(n),
            Family::F2 => family_f2(n),
        }
    }

    pub fn n_qubits(self, n: usize) -> usize {
        match self {
            Family::F1 => n + 1,
            Family::F2 => 2,
        }
    }

    pub fn n_steps(self, n: usize) -> usize {
        match self {
            Family::F1 => 2 * n,
            Family::F2 => 4 * n,
        }
    }

    /// Dimension of `system ⊗ clock` for instance `n`.
    pub fn hamiltonian_dim(self, n: usize) -> usize {
        (1 << self.n_qubits(n)) * (self.n_steps(n) + 1)
    }

    /// Kernel dimension of the propagation Hamiltonian: one history state
    /// per system basis input.
    pub fn kernel_dim(self, n: usize) -> usize {
        1 << self.n_qubits(n)
    }

    /// Joint post-selection probability of instance `n`.
    pub fn joint_prob(self, n: usize) -> f64 {
        match self {
            Family::F1 => 0.5f64.powi(n as i32),
            Family::F2 => 0.25f64.powi(n as i32),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::F1 => "f1",
            Family::F2 => "f2",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f1" => Ok(Family::F1),
            "f2" => Ok(Family::F2),
            other => Err(Error::InvalidCircuit(format!("unknown family `{other}`"))),
        }
    }
}

fn keep_plus(q: usize) -> MeasureStep {
    MeasureStep::new(Basis::X, q, Outcome::Plus).with_prob(HALF)
}

/// CZ between the proof qubit 0 and a `|+⟩` ancilla on qubit 1, then
/// post-select qubit 0 on `|+⟩`. Leaves `H|ψ⟩` on qubit 1 with p = 1/2.
pub fn hadamard_gadget() -> Circuit {
    Circuit::new(
        "hadamard_gadget",
        QubitRegister::new(vec![Role::Proof, Role::Plus]),
    )
    .gate(Gate::Cz, &[0, 1])
    .measure(keep_plus(0))
}

pub fn family_f1(n: usize) -> Result<Circuit> {
    if n < 1 {
        return Err(Error::InvalidCircuit("family f1 needs n >= 1".into()));
    }
    let mut roles = vec![Role::Plus; n + 1];
    roles[0] = Role::Proof;
    let mut c = Circuit::new(format!("f1_n{n}"), QubitRegister::new(roles));
    for j in 0..n {
        c = c.gate(Gate::Cz, &[j, j + 1]).measure(keep_plus(j));
    }
    Ok(c)
}

pub fn family_f2(n: usize) -> Result<Circuit> {
    if n < 1 {
        return Err(Error::InvalidCircuit("family f2 needs n >= 1".into()));
    }
    let mut c = Circuit::new(
        format!("f2_n{n}"),
        QubitRegister::new(vec![Role::Proof, Role::Plus]),
    );
    for _ in 0..n {
        c = c
            .gate(Gate::Cz, &[0, 1])
            .measure(keep_plus(0))
            .gate(Gate::Cz, &[0, 1])
            .measure(keep_plus(1));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{run, StateVector};

    #[test]
    fn shapes() {
        for n in 1..5 {
            let f1 = family_f1(n).unwrap();
            assert_eq!(
                (f1.n_qubits(), f1.n_steps(), f1.dim_clock()),
                (n + 1, 2 * n, 2 * n + 1)
            );
            let f2 = family_f2(n).unwrap();
            assert_eq!(
                (f2.n_qubits(), f2.n_steps(), f2.dim_clock()),
                (2, 4 * n, 4 * n + 1)
            );
            assert_eq!(Family::F1.hamiltonian_dim(n), f1.dim_sys() * f1.dim_clock());
            assert!(f1.validate().is_valid() && f2.validate().is_valid());
        }
        assert!(family_f1(0).is_err());
        assert!(family_f2(0).is_err());
    }

    #[test]
    fn gadget_maps_plus_to_zero() {
        let t = run(&hadamard_gadget(), &StateVector::from_label("+").unwrap()).unwrap();
        // qubit 0 is left in |+⟩, qubit 1 carries H|+⟩ = |0⟩
        let expected = StateVector::from_label("+0").unwrap();
        assert!((t.final_state().fidelity(&expected) - 1.0).abs() < 1e-12);
        assert!(hadamard_gadget().validate().is_valid());
    }

    #[test]
    fn family_names_parse() {
        assert_eq!("F1".parse::<Family>().unwrap(), Family::F1);
        assert_eq!("f2".parse::<Family>().unwrap(), Family::F2);
        assert!("f3".parse::<Family>().is_err());
    }
}
