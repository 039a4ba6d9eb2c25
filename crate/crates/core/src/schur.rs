//! The three-qubit Schur-Weyl compression circuit and the general symmetric codec.
//!
//! Qubits are numbered `0, 1, 2` (top to bottom). On `psi^(x)3` the transform leaves
//! qubit 2 in `|0>` and qubits 0-1 in
//!
//! ```text
//! alpha^3 |00> + sqrt3 alpha^2 beta |01> + sqrt3 alpha beta^2 |10> + beta^3 |11>
//! ```
//!
//! i.e. the pair holds the number of `|1>` excitations as a two-bit binary number,
//! with the Dicke amplitudes of the symmetric subspace.
//!
//! The circuit is built in three stages:
//!
//! 1. two-qubit transform on qubits 0-1: CNOT(0 -> 1) then Hadamard on 0 controlled by 1.
//!    `psi (x) psi` becomes `alpha^2|00> + sqrt2 alpha beta|01> + beta^2|10>`.
//! 2. increment of the two-bit counter controlled by qubit 2: Toffoli(2, 1 -> 0) then
//!    CNOT(2 -> 1). Afterwards qubit 2 is still entangled with the counter.
//! 3. disentangling: `U1` on qubit 2 controlled by qubit 1, then `U2` controlled by
//!    qubit 0. In the feed-forward variant this stage is replaced by a circular-basis
//!    measurement of qubit 2 and an outcome-dependent diagonal phase on qubits 0-1.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::SQRT_2;

use crate::error::{invalid, Error, Result};
use crate::qstate::{
    check_register_size, gates, make_product_state, Circuit, MeasurementBasis, QubitState, StateVector,
    Unitary, ALGEBRAIC_TOL, COMPOSED_TOL, MAX_DENSE_QUBITS,
};

/// The residual phase `a` of the uncorrected feed-forward branches,
/// `e^{ia} sqrt3 = sqrt2 + i`, i.e. `a = atan(1/sqrt2)`.
pub fn collapse_phase() -> f64 {
    (1.0 / SQRT_2).atan()
}

/// The single-qubit disentanglers `(U1, U2)`:
/// `U1 (sqrt(2/3), sqrt(1/3)) = |0>`, `U2 (sqrt(1/3), sqrt(2/3)) = |0>`, `U2 U1 = X`.
///
/// Real orthogonal representatives are used; the constraints fix them only up to
/// phases on the `|1>` output.
pub fn u1_u2_matrices() -> (Unitary, Unitary) {
    let (a, b) = ((2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt());
    let u1 = Unitary::from_real_rows(2, &[a, b, -b, a]).expect("U1 is orthogonal");
    let u2 = Unitary::from_real_rows(2, &[b, a, a, -b]).expect("U2 is orthogonal");
    (u1, u2)
}

/// Stages 1 and 2 (everything before the disentangling gates).
fn qswt3_prefix() -> Circuit {
    let mut c = Circuit::new(3).expect("3 qubits");
    let x = gates::pauli_x();
    c.push_gate(x.clone(), &[1], &[0]).expect("valid step");
    c.push_gate(gates::hadamard(), &[0], &[1]).expect("valid step");
    c.push_gate(x.clone(), &[0], &[2, 1]).expect("valid step");
    c.push_gate(x, &[1], &[2]).expect("valid step");
    c
}

/// The fully unitary three-qubit transform.
pub fn build_qswt3_full() -> Circuit {
    let (u1, u2) = u1_u2_matrices();
    let mut c = qswt3_prefix();
    c.push_gate(u1, &[2], &[1]).expect("valid step");
    c.push_gate(u2, &[2], &[0]).expect("valid step");
    c
}

/// The measurement/feed-forward variant: qubit 2 is measured in the circular basis and
/// the pair is phase-corrected with [`derive_corrections`].
pub fn build_qswt3_feedforward() -> Circuit {
    let corrections = derive_corrections().expect("feed-forward corrections are consistent");
    let mut c = qswt3_prefix();
    c.push_measure_correct(2, MeasurementBasis::circular(), corrections)
        .expect("valid step");
    c
}

/// `(alpha^3, sqrt3 alpha^2 beta, sqrt3 alpha beta^2, beta^3)` over `|00>..|11>`.
pub fn compress3(psi: &QubitState) -> StateVector {
    let (a, b) = (psi.alpha(), psi.beta());
    let r3 = 3f64.sqrt();
    let amplitudes = vec![a * a * a, a * a * b * r3, a * b * b * r3, b * b * b];
    StateVector::from_amplitudes(amplitudes).expect("(|a|^2+|b|^2)^3 = 1")
}

/// Outcome of the feed-forward variant on `psi^(x)3`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedForwardResult {
    /// 0 for `(|0> + i|1>)/sqrt2`, 1 for `(|0> - i|1>)/sqrt2`.
    pub outcome: u8,
    pub probability: f64,
    /// State of qubits 0-1 after correction.
    pub compressed: StateVector,
    pub correction_applied: Unitary,
}

/// Runs the feed-forward circuit on `psi^(x)3`, sampling the measurement.
pub fn compress3_feedforward<R: Rng + ?Sized>(psi: &QubitState, rng: &mut R) -> Result<FeedForwardResult> {
    let circuit = build_qswt3_feedforward();
    let run = circuit.run(&make_product_state(psi, 3)?, rng)?;
    finish_feedforward(&circuit, run)
}

/// Runs the feed-forward circuit on `psi^(x)3` with the measurement forced to `outcome`.
pub fn feedforward_branch(psi: &QubitState, outcome: u8) -> Result<FeedForwardResult> {
    let circuit = build_qswt3_feedforward();
    let run = circuit.run_forced(&make_product_state(psi, 3)?, &[outcome])?;
    finish_feedforward(&circuit, run)
}

fn finish_feedforward(circuit: &Circuit, run: crate::qstate::CircuitRun) -> Result<FeedForwardResult> {
    let record = run.measurements[0];
    let basis = MeasurementBasis::circular();
    let (p, pair) = run.state.project_out(2, basis.vector(record.outcome))?;
    if (p - 1.0).abs() > COMPOSED_TOL {
        return Err(Error::Internal(format!("qubit 2 not in its measured state (p = {p})")));
    }
    let correction_applied = match circuit.steps().last() {
        Some(crate::qstate::CircuitStep::MeasureCorrect { corrections, .. }) => {
            corrections[usize::from(record.outcome)].clone()
        }
        _ => return Err(Error::Internal("feed-forward circuit lost its final step".into())),
    };
    Ok(FeedForwardResult {
        outcome: record.outcome,
        probability: record.probability,
        compressed: StateVector::normalized(pair)?,
        correction_applied,
    })
}

/// The pair state right after measuring qubit 2 (before any correction), with the
/// branch probability.
pub fn feedforward_uncorrected(psi: &QubitState, outcome: u8) -> Result<(f64, StateVector)> {
    if outcome > 1 {
        return invalid(format!("outcome must be 0 or 1, got {outcome}"));
    }
    let run = qswt3_prefix().run_forced(&make_product_state(psi, 3)?, &[])?;
    let basis = MeasurementBasis::circular();
    let (p, pair) = run.state.project_out(2, basis.vector(outcome))?;
    if p <= 0.0 {
        return Err(Error::Internal("zero-probability feed-forward branch".into()));
    }
    Ok((p, StateVector::normalized(pair)?))
}

/// Diagonal phase corrections, indexed by measurement outcome, that map each collapsed
/// pair onto [`compress3`] up to a global phase.
///
/// Solved numerically from two generic probe inputs; the entries are normalised so
/// that `C[0,0] = 1`. Fails with an internal error if the probes disagree, which would
/// mean the phases depend on the input (a construction bug).
pub fn derive_corrections() -> Result<[Unitary; 2]> {
    let probes = [
        QubitState::normalized(Complex64::new(0.8, 0.1), Complex64::new(0.3, 0.5))?,
        QubitState::normalized(Complex64::new(0.4, -0.2), Complex64::new(-0.6, 0.7))?,
    ];
    let mut out = Vec::with_capacity(2);
    for outcome in 0..2u8 {
        let mut solved: Option<[Complex64; 4]> = None;
        for psi in &probes {
            let (_, collapsed) = feedforward_uncorrected(psi, outcome)?;
            let target = compress3(psi);
            let mut phases = [Complex64::new(0.0, 0.0); 4];
            for (k, (c, t)) in collapsed.amplitudes().iter().zip(target.amplitudes()).enumerate() {
                if (c.norm() - t.norm()).abs() > COMPOSED_TOL || c.norm() < 1e-6 {
                    return Err(Error::Internal(format!(
                        "collapsed amplitude {k} has modulus {} but the target has {}",
                        c.norm(),
                        t.norm()
                    )));
                }
                phases[k] = (t / t.norm()) / (c / c.norm());
            }
            let reference = phases[0];
            phases.iter_mut().for_each(|p| *p /= reference);
            if let Some(prev) = solved {
                let drift = prev.iter().zip(&phases).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                if drift > COMPOSED_TOL {
                    return Err(Error::Internal(format!(
                        "correction phases depend on the input (drift {drift:e})"
                    )));
                }
            }
            solved = Some(phases);
        }
        out.push(Unitary::diagonal(&solved.expect("two probes"))?);
    }
    let minus = out.pop().expect("two outcomes");
    let plus = out.pop().expect("two outcomes");
    Ok([plus, minus])
}

/// Amplitudes of an `n`-copy symmetric state in the Dicke basis, indexed by the number
/// `k` of `|1>` excitations.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricCode {
    n_copies: usize,
    coefficients: Vec<Complex64>,
}

impl SymmetricCode {
    /// Fails unless there are `n_copies + 1` coefficients of unit norm (`1e-12`).
    pub fn new(n_copies: usize, coefficients: Vec<Complex64>) -> Result<Self> {
        if n_copies == 0 {
            return invalid("a symmetric code needs at least one copy");
        }
        if coefficients.len() != n_copies + 1 {
            return invalid(format!(
                "{} copies need {} coefficients, got {}",
                n_copies,
                n_copies + 1,
                coefficients.len()
            ));
        }
        let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= ALGEBRAIC_TOL) {
            return invalid(format!("symmetric code norm is {norm}, expected 1"));
        }
        Ok(Self {
            n_copies,
            coefficients,
        })
    }

    pub fn n_copies(&self) -> usize {
        self.n_copies
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// `ceil(log2(n + 1))`, the register size that holds the code.
    pub fn packed_qubits(&self) -> usize {
        packed_qubits(self.n_copies)
    }

    /// The code as a state on [`SymmetricCode::packed_qubits`] qubits, `k` stored in
    /// binary and unused basis states zero-padded.
    pub fn to_packed_state(&self) -> Result<StateVector> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << self.packed_qubits()];
        amplitudes[..self.coefficients.len()].copy_from_slice(&self.coefficients);
        StateVector::from_amplitudes(amplitudes)
    }

    /// Inverse of [`SymmetricCode::to_packed_state`]. Fails if any padding amplitude
    /// exceeds `1e-10`.
    pub fn from_packed_state(n_copies: usize, packed: &StateVector) -> Result<Self> {
        if packed.num_qubits() != packed_qubits(n_copies) {
            return invalid(format!(
                "{} copies pack into {} qubits, got {}",
                n_copies,
                packed_qubits(n_copies),
                packed.num_qubits()
            ));
        }
        let amps = packed.amplitudes();
        let leak = amps[n_copies + 1..].iter().map(|a| a.norm()).fold(0.0, f64::max);
        if leak > COMPOSED_TOL {
            return invalid(format!("padding amplitudes are nonzero (max {leak:e})"));
        }
        let coefficients = amps[..=n_copies].to_vec();
        let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        Self::new(n_copies, coefficients.into_iter().map(|c| c / norm).collect())
    }
}

/// `ceil(log2(n + 1))`.
pub fn packed_qubits(n_copies: usize) -> usize {
    (n_copies + 1).next_power_of_two().trailing_zeros() as usize
}

/// Compresses `psi^(x)n`: coefficient `k` is `sqrt(C(n,k)) alpha^(n-k) beta^k`.
pub fn symmetric_encode(psi: &QubitState, n: usize) -> Result<SymmetricCode> {
    if n == 0 {
        return invalid("need at least one copy");
    }
    let (a, b) = (psi.alpha(), psi.beta());
    let coefficients: Vec<Complex64> = (0..=n)
        .map(|k| {
            let m = n - k;
            if n <= 1000 {
                a.powi(m as i32) * b.powi(k as i32) * binomial(n, k).sqrt()
            } else {
                // log domain; 0^0 = 1
                let ln = |z: Complex64, e: usize| if e == 0 { 0.0 } else { e as f64 * z.norm().ln() };
                let magnitude = (0.5 * statrs::function::factorial::ln_binomial(n as u64, k as u64)
                    + ln(a, m)
                    + ln(b, k))
                    .exp();
                let phase = m as f64 * a.arg() + k as f64 * b.arg();
                Complex64::from_polar(magnitude, phase)
            }
        })
        .collect();
    // Renormalise away rounding; the exact coefficients have unit norm.
    let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    SymmetricCode::new(n, coefficients.into_iter().map(|c| c / norm).collect())
}

/// Compresses an arbitrary permutation-invariant `n`-qubit state.
///
/// Invariance is checked against every adjacent transposition (they generate the
/// symmetric group); a violation above `1e-10` is rejected with the largest observed
/// asymmetry in the message.
pub fn symmetric_encode_general(state: &StateVector) -> Result<SymmetricCode> {
    let n = state.num_qubits();
    let amps = state.amplitudes();
    let mut asymmetry = 0.0f64;
    for q in 0..n - 1 {
        let (hi, lo) = (1usize << (n - 1 - q), 1usize << (n - 2 - q));
        for (b, a) in amps.iter().enumerate() {
            let swapped = if ((b & hi) != 0) != ((b & lo) != 0) { b ^ hi ^ lo } else { b };
            asymmetry = asymmetry.max((a - amps[swapped]).norm());
        }
    }
    if asymmetry > COMPOSED_TOL {
        return invalid(format!(
            "state is not permutation invariant (max asymmetry {asymmetry:e})"
        ));
    }
    let coefficients: Vec<Complex64> = (0..=n)
        .map(|k| amps[(1usize << k) - 1] * binomial(n, k).sqrt())
        .collect();
    let norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > COMPOSED_TOL {
        return Err(Error::Internal(format!("symmetric coefficients have norm {norm}")));
    }
    SymmetricCode::new(n, coefficients.into_iter().map(|c| c / norm).collect())
}

/// Expands a code back to the dense symmetric `n`-qubit state: every weight-`k`
/// bitstring gets `coefficient_k / sqrt(C(n,k))`.
pub fn symmetric_decode(code: &SymmetricCode) -> Result<StateVector> {
    let n = code.n_copies;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "decoding {n} copies needs 2^{n} amplitudes (limit {MAX_DENSE_QUBITS} qubits)"
        )));
    }
    check_register_size(n)?;
    let scaled: Vec<Complex64> = (0..=n)
        .map(|k| code.coefficients[k] / binomial(n, k).sqrt())
        .collect();
    let amplitudes = (0..1usize << n).map(|b| scaled[b.count_ones() as usize]).collect();
    StateVector::normalized(amplitudes)
}

/// `C(n, k)` as a float (exact for the sizes used here).
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
