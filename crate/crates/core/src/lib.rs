//! Clock Hamiltonians for quantum circuits with post-selected measurements.
//!
//! A circuit (gates plus post-selected single-qubit measurements) is
//! simulated on state vectors, certified tame (every post-selection succeeds
//! with a probability independent of the proof state), and compiled into a
//! sparse Hamiltonian on `system ⊗ clock` whose kernel holds the circuit's
//! history states. The spectral module computes kernels and gaps, and the
//! experiment harness sweeps benchmark families to fit how the gap scales.

pub mod circuit;
pub mod compiler;
pub mod error;
pub mod experiment;
pub mod families;
pub mod fitting;
pub mod linalg;
pub mod mtx;
pub mod plot;
pub mod simulator;
pub mod sparse;
pub mod spectral;

pub use circuit::{parse_circuit, Circuit};
pub use compiler::{compile, ClockHamiltonian, CompileOptions, PostCoupling};
pub use error::{Error, ParseError, Result};
pub use families::Family;
pub use simulator::StateVector;
pub use sparse::CscMatrix;
