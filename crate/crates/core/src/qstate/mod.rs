//! Dense state-vector simulation.
//!
//! Basis ordering: in an `n`-qubit register, qubit `0` is the most significant bit of
//! the basis index, so `|q0 q1 ... q(n-1)>` reads left to right like the usual ket
//! notation. Index `0b011` in a 3-qubit register is `|011>`.

mod circuit;
mod measure;
mod unitary;

pub use circuit::{circuit_unitary, Circuit, CircuitRun, CircuitStep, MeasurementRecord};
pub use measure::{measure_projective, MeasurementBasis, Measured};
pub use unitary::{gates, Unitary};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Tolerance for algebraic identities (normalisation, unitarity).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for results of composed circuits.
pub const COMPOSED_TOL: f64 = 1e-10;
/// Largest register held densely.
pub const MAX_DENSE_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A normalised single-qubit pure state `alpha|0> + beta|1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState {
    alpha: Complex64,
    beta: Complex64,
}

impl QubitState {
    /// Fails unless `|alpha|^2 + |beta|^2 = 1` within `1e-12`.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm_sqr = alpha.norm_sqr() + beta.norm_sqr();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > ALGEBRAIC_TOL {
            return invalid(format!(
                "qubit amplitudes must satisfy |a|^2+|b|^2=1, got {norm_sqr}"
            ));
        }
        Ok(Self { alpha, beta })
    }

    /// Rescales `(alpha, beta)` to unit norm. Fails on the zero vector.
    pub fn normalized(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return invalid("cannot normalise a zero or non-finite qubit vector");
        }
        Ok(Self {
            alpha: alpha / norm,
            beta: beta / norm,
        })
    }

    pub fn real(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0))
    }

    /// `cos(polar/2)|0> + e^{i azimuth} sin(polar/2)|1>`, the Bloch-sphere point
    /// with the given angles.
    pub fn from_bloch(polar: f64, azimuth: f64) -> Self {
        let (s, c) = (polar / 2.0).sin_cos();
        Self {
            alpha: Complex64::new(c, 0.0),
            beta: Complex64::from_polar(s, azimuth),
        }
    }

    pub fn zero() -> Self {
        Self { alpha: ONE, beta: ZERO }
    }

    pub fn one() -> Self {
        Self { alpha: ZERO, beta: ONE }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QubitState) -> Complex64 {
        self.alpha.conj() * other.alpha + self.beta.conj() * other.beta
    }

    /// The orthogonal state `conj(beta)|0> - conj(alpha)|1>`.
    pub fn orthogonal(&self) -> Self {
        Self {
            alpha: self.beta.conj(),
            beta: -self.alpha.conj(),
        }
    }

    /// Bloch vector `(<X>, <Y>, <Z>)` in Pauli units (length 1 for pure states).
    pub fn bloch_vector(&self) -> [f64; 3] {
        let cross = self.alpha.conj() * self.beta;
        [
            2.0 * cross.re,
            2.0 * cross.im,
            self.alpha.norm_sqr() - self.beta.norm_sqr(),
        ]
    }
}

/// Unit-norm vector of `2^n` amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Validates length (a power of two, at least 2) and norm (within `1e-12`).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let num_qubits = qubits_for_len(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr.sqrt() - 1.0).abs() > ALGEBRAIC_TOL {
            return invalid(format!("state vector norm is {}, expected 1", norm_sqr.sqrt()));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Like [`StateVector::from_amplitudes`] but rescales to unit norm first.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let num_qubits = qubits_for_len(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return invalid("cannot normalise a zero or non-finite state vector");
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index>` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_register_size(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return invalid(format!("basis index {index} out of range for {num_qubits} qubits"));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|amplitude|^2` for every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            ));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// `self (x) other`, with `self` occupying the leading qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        check_register_size(self.num_qubits + other.num_qubits)?;
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        Ok(Self {
            num_qubits: self.num_qubits + other.num_qubits,
            amplitudes,
        })
    }

    /// Applies `u` to `targets`, conditioned on every qubit in `controls` being `|1>`.
    ///
    /// `targets[0]` is the most significant qubit of `u`'s own basis.
    pub fn apply(&self, u: &Unitary, targets: &[usize], controls: &[usize]) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_in_place(u, targets, controls)?;
        Ok(out)
    }

    pub fn apply_in_place(
        &mut self,
        u: &Unitary,
        targets: &[usize],
        controls: &[usize],
    ) -> Result<()> {
        validate_indices(self.num_qubits, targets, controls)?;
        if u.dim() != 1 << targets.len() {
            return invalid(format!(
                "unitary of dimension {} cannot act on {} target qubit(s)",
                u.dim(),
                targets.len()
            ));
        }
        let n = self.num_qubits;
        let bit = |q: usize| 1usize << (n - 1 - q);
        let target_mask: usize = targets.iter().map(|&q| bit(q)).sum();
        let control_mask: usize = controls.iter().map(|&q| bit(q)).sum();
        let k = targets.len();
        let offsets: Vec<usize> = (0..1usize << k)
            .map(|j| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|&(r, _)| (j >> (k - 1 - r)) & 1 == 1)
                    .map(|(_, &q)| bit(q))
                    .sum()
            })
            .collect();
        let matrix = u.matrix();
        let mut gathered = vec![ZERO; offsets.len()];
        for base in 0..self.amplitudes.len() {
            if base & target_mask != 0 || base & control_mask != control_mask {
                continue;
            }
            for (g, &off) in gathered.iter_mut().zip(&offsets) {
                *g = self.amplitudes[base | off];
            }
            for (row, &off) in offsets.iter().enumerate() {
                self.amplitudes[base | off] = gathered
                    .iter()
                    .enumerate()
                    .map(|(col, g)| matrix[(row, col)] * g)
                    .sum();
            }
        }
        Ok(())
    }

    /// Projects `qubit` onto `vector` and returns `(probability, remaining register)`,
    /// the remaining register having `qubit` removed. The remaining state is zero-norm
    /// (and returned unnormalised) when the probability vanishes.
    pub fn project_out(&self, qubit: usize, vector: &QubitState) -> Result<(f64, Vec<Complex64>)> {
        if qubit >= self.num_qubits {
            return invalid(format!("qubit {qubit} out of range"));
        }
        if self.num_qubits < 2 {
            return invalid("cannot remove the only qubit of a register");
        }
        let n = self.num_qubits;
        let shift = n - 1 - qubit;
        let low_mask = (1usize << shift) - 1;
        let (v0, v1) = (vector.alpha().conj(), vector.beta().conj());
        let rest: Vec<Complex64> = (0..self.amplitudes.len() / 2)
            .map(|r| {
                let i0 = ((r & !low_mask) << 1) | (r & low_mask);
                let i1 = i0 | (1 << shift);
                v0 * self.amplitudes[i0] + v1 * self.amplitudes[i1]
            })
            .collect();
        let prob = rest.iter().map(|a| a.norm_sqr()).sum();
        Ok((prob, rest))
    }
}

/// `psi^{(x) n}`: amplitude at bitstring `b` is `alpha^(#zeros) beta^(#ones)`.
pub fn make_product_state(psi: &QubitState, n: usize) -> Result<StateVector> {
    if n == 0 {
        return invalid("product state needs at least one copy");
    }
    check_register_size(n)?;
    let amplitudes = (0..1usize << n)
        .map(|b| {
            let ones = b.count_ones() as i32;
            psi.alpha().powi(n as i32 - ones) * psi.beta().powi(ones)
        })
        .collect();
    Ok(StateVector {
        num_qubits: n,
        amplitudes,
    })
}

/// True iff `|<a|b>| >= 1 - tol`.
pub fn equal_up_to_global_phase(a: &StateVector, b: &StateVector, tol: f64) -> Result<bool> {
    Ok(a.inner(b)?.norm() >= 1.0 - tol)
}

pub(crate) fn check_register_size(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_DENSE_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "{num_qubits} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
        )));
    }
    Ok(())
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return invalid(format!("state length {len} is not a power of two >= 2"));
    }
    let n = len.trailing_zeros() as usize;
    check_register_size(n)?;
    Ok(n)
}

pub(crate) fn validate_indices(num_qubits: usize, targets: &[usize], controls: &[usize]) -> Result<()> {
    if targets.is_empty() {
        return invalid("a gate needs at least one target");
    }
    let mut seen = vec![false; num_qubits];
    for &q in targets.iter().chain(controls) {
        if q >= num_qubits {
            return invalid(format!("qubit index {q} out of range for {num_qubits} qubits"));
        }
        if std::mem::replace(&mut seen[q], true) {
            return invalid(format!("qubit index {q} used twice in one step"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn qubit_state_rejects_unnormalised() {
        assert!(QubitState::real(1.0, 1.0).is_err());
        assert!(QubitState::real(0.6, 0.8).is_ok());
        assert!(QubitState::normalized(ZERO, ZERO).is_err());
    }

    #[test]
    fn product_state_all_zeros() {
        let s = make_product_state(&QubitState::zero(), 3).unwrap();
        assert_eq!(s.amplitudes()[0], ONE);
        assert!(s.amplitudes()[1..].iter().all(|a| *a == ZERO));
    }

    #[test]
    fn product_state_uniform() {
        let plus = QubitState::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        let s = make_product_state(&plus, 2).unwrap();
        for a in s.amplitudes() {
            assert_abs_diff_eq!(a.re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn product_state_theta_13_5() {
        let t = 27f64.to_radians();
        let psi = QubitState::real(t.cos(), t.sin()).unwrap();
        let s = make_product_state(&psi, 3).unwrap();
        // |011>: one zero, two ones
        assert_abs_diff_eq!(s.amplitudes()[0b011].re, t.cos() * t.sin().powi(2), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[0b011].re, 0.18365, epsilon = 1e-5);
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_zero_copies() {
        assert!(matches!(
            make_product_state(&QubitState::zero(), 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn cnot_truth_table() {
        let x = gates::pauli_x();
        let s = StateVector::basis(2, 0b10).unwrap().apply(&x, &[1], &[0]).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b11).unwrap());
        let s = StateVector::basis(2, 0b00).unwrap().apply(&x, &[1], &[0]).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b00).unwrap());
    }

    #[test]
    fn controlled_hadamard_row() {
        let h = gates::hadamard();
        let s = StateVector::basis(2, 0b11).unwrap().apply(&h, &[1], &[0]).unwrap();
        let a = s.amplitudes();
        assert_abs_diff_eq!(a[0b10].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(a[0b11].re, -FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_eq!(a[0], ZERO);
        assert_eq!(a[1], ZERO);
    }

    #[test]
    fn apply_rejects_bad_indices() {
        let s = StateVector::basis(2, 0).unwrap();
        let x = gates::pauli_x();
        assert!(s.apply(&x, &[1], &[1]).is_err());
        assert!(s.apply(&x, &[2], &[]).is_err());
        assert!(s.apply(&x, &[0, 1], &[]).is_err());
        assert!(s.apply(&gates::cnot(), &[0], &[]).is_err());
    }

    #[test]
    fn global_phase_equality() {
        let a = StateVector::basis(2, 0b01).unwrap();
        let b = StateVector::from_amplitudes(vec![ZERO, Complex64::from_polar(1.0, 0.7), ZERO, ZERO])
            .unwrap();
        assert!(equal_up_to_global_phase(&a, &b, 1e-10).unwrap());
        let c = StateVector::basis(2, 0b10).unwrap();
        assert!(!equal_up_to_global_phase(&a, &c, 1e-10).unwrap());
        let d = StateVector::basis(3, 0).unwrap();
        assert!(equal_up_to_global_phase(&a, &d, 1e-10).is_err());
    }

    #[test]
    fn project_out_middle_qubit() {
        // (|010> + |111>)/sqrt2, project qubit 1 onto |1>
        let mut amps = vec![ZERO; 8];
        amps[0b010] = c(FRAC_1_SQRT_2);
        amps[0b111] = c(FRAC_1_SQRT_2);
        let s = StateVector::from_amplitudes(amps).unwrap();
        let (p, rest) = s.project_out(1, &QubitState::one()).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rest[0b00].re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(rest[0b11].re, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn register_size_limit() {
        assert!(matches!(
            StateVector::basis(MAX_DENSE_QUBITS + 1, 0),
            Err(Error::ResourceLimit(_))
        ));
    }
}
