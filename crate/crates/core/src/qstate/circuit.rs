use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use super::measure::{branch, MeasurementBasis};
use super::{validate_indices, StateVector, Unitary};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum CircuitStep {
    /// `unitary` on `targets`, active when all `controls` are `|1>`.
    Gate {
        unitary: Unitary,
        targets: Vec<usize>,
        controls: Vec<usize>,
    },
    /// Measure `qubit` in `basis`, then apply `corrections[outcome]` to every other
    /// qubit (in ascending index order). The measured qubit stays in the register,
    /// collapsed onto the observed basis vector.
    MeasureCorrect {
        qubit: usize,
        basis: MeasurementBasis,
        corrections: [Unitary; 2],
    },
}

/// One mid-circuit measurement as it happened during a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub qubit: usize,
    pub outcome: u8,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitRun {
    pub state: StateVector,
    pub measurements: Vec<MeasurementRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    steps: Vec<CircuitStep>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return invalid("a circuit needs at least one qubit");
        }
        super::check_register_size(num_qubits)?;
        Ok(Self {
            num_qubits,
            steps: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn steps(&self) -> &[CircuitStep] {
        &self.steps
    }

    pub fn push_gate(&mut self, unitary: Unitary, targets: &[usize], controls: &[usize]) -> Result<()> {
        validate_indices(self.num_qubits, targets, controls)?;
        if unitary.dim() != 1 << targets.len() {
            return invalid(format!(
                "unitary of dimension {} cannot act on {} target(s)",
                unitary.dim(),
                targets.len()
            ));
        }
        self.steps.push(CircuitStep::Gate {
            unitary,
            targets: targets.to_vec(),
            controls: controls.to_vec(),
        });
        Ok(())
    }

    pub fn push_measure_correct(
        &mut self,
        qubit: usize,
        basis: MeasurementBasis,
        corrections: [Unitary; 2],
    ) -> Result<()> {
        if qubit >= self.num_qubits || self.num_qubits < 2 {
            return invalid(format!("cannot measure-and-correct qubit {qubit}"));
        }
        let rest_dim = 1usize << (self.num_qubits - 1);
        if corrections.iter().any(|c| c.dim() != rest_dim) {
            return invalid(format!("corrections must act on {} qubits", self.num_qubits - 1));
        }
        self.steps.push(CircuitStep::MeasureCorrect {
            qubit,
            basis,
            corrections,
        });
        Ok(())
    }

    /// Runs the circuit, sampling measurement outcomes from `rng`.
    pub fn run<R: Rng + ?Sized>(&self, input: &StateVector, rng: &mut R) -> Result<CircuitRun> {
        self.execute(input, |p0| if rng.random::<f64>() < p0 { 0 } else { 1 })
    }

    /// Runs the circuit with the `k`-th measurement forced to `outcomes[k]`.
    /// The recorded probabilities are still the Born probabilities of those branches.
    pub fn run_forced(&self, input: &StateVector, outcomes: &[u8]) -> Result<CircuitRun> {
        let mut forced = outcomes.iter().copied();
        let needed = self
            .steps
            .iter()
            .filter(|s| matches!(s, CircuitStep::MeasureCorrect { .. }))
            .count();
        if needed != outcomes.len() {
            return invalid(format!("circuit has {needed} measurement(s), got {} outcome(s)", outcomes.len()));
        }
        self.execute(input, move |_| forced.next().unwrap_or(0))
    }

    fn execute(&self, input: &StateVector, mut choose: impl FnMut(f64) -> u8) -> Result<CircuitRun> {
        if input.num_qubits() != self.num_qubits {
            return invalid(format!(
                "circuit acts on {} qubits, input has {}",
                self.num_qubits,
                input.num_qubits()
            ));
        }
        let mut state = input.clone();
        let mut measurements = Vec::new();
        for step in &self.steps {
            match step {
                CircuitStep::Gate {
                    unitary,
                    targets,
                    controls,
                } => state.apply_in_place(unitary, targets, controls)?,
                CircuitStep::MeasureCorrect {
                    qubit,
                    basis,
                    corrections,
                } => {
                    let (p0, _) = state.project_out(*qubit, basis.vector(0))?;
                    let outcome = choose(p0);
                    let (probability, collapsed) = branch(&state, *qubit, basis, outcome)?;
                    state = collapsed;
                    let rest: Vec<usize> = (0..self.num_qubits).filter(|q| q != qubit).collect();
                    state.apply_in_place(&corrections[usize::from(outcome)], &rest, &[])?;
                    measurements.push(MeasurementRecord {
                        qubit: *qubit,
                        outcome,
                        probability,
                    });
                }
            }
        }
        Ok(CircuitRun {
            state,
            measurements,
        })
    }
}

/// The full `2^n x 2^n` unitary of a measurement-free circuit, as the product of each
/// step's embedded matrix in application order.
pub fn circuit_unitary(c: &Circuit) -> Result<Unitary> {
    let dim = 1usize << c.num_qubits;
    let mut total = DMatrix::<Complex64>::identity(dim, dim);
    for step in &c.steps {
        match step {
            CircuitStep::Gate {
                unitary,
                targets,
                controls,
            } => {
                let embedded = embed(unitary, targets, controls, c.num_qubits);
                total = embedded * total;
            }
            CircuitStep::MeasureCorrect { .. } => {
                return Err(Error::Unsupported(
                    "a circuit containing measurement has no single unitary".into(),
                ))
            }
        }
    }
    Unitary::new(total)
}

/// Entry-by-entry embedding: `M[i, j] = u[t(i), t(j)]` when `i` and `j` agree outside
/// the targets and all controls of `j` are set, identity otherwise.
fn embed(u: &Unitary, targets: &[usize], controls: &[usize], n: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    let sub = |idx: usize| targets.iter().fold(0usize, |acc, &q| (acc << 1) | bit(idx, q));
    let target_mask: usize = targets.iter().map(|&q| 1usize << (n - 1 - q)).sum();
    DMatrix::from_fn(dim, dim, |i, j| {
        let active = controls.iter().all(|&q| bit(j, q) == 1);
        if active {
            if i & !target_mask == j & !target_mask {
                u.matrix()[(sub(i), sub(j))]
            } else {
                Complex64::new(0.0, 0.0)
            }
        } else if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}
