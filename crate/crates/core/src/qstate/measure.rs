use num_complex::Complex64;
use rand::Rng;

use super::{QubitState, StateVector, ALGEBRAIC_TOL};
use crate::error::{invalid, Error, Result};

/// An orthonormal single-qubit basis; outcome `k` corresponds to `vectors()[k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementBasis {
    vectors: [QubitState; 2],
}

impl MeasurementBasis {
    /// Fails unless `<v0|v1> = 0` within `1e-12`.
    pub fn new(v0: QubitState, v1: QubitState) -> Result<Self> {
        let overlap = v0.inner(&v1).norm();
        if overlap > ALGEBRAIC_TOL {
            return invalid(format!("basis vectors are not orthogonal (|<v0|v1>| = {overlap:e})"));
        }
        Ok(Self { vectors: [v0, v1] })
    }

    /// `{|0>, |1>}`.
    pub fn computational() -> Self {
        Self {
            vectors: [QubitState::zero(), QubitState::one()],
        }
    }

    /// `{(|0> + i|1>)/sqrt2, (|0> - i|1>)/sqrt2}`.
    pub fn circular() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QubitState::new(Complex64::new(h, 0.0), Complex64::new(0.0, h)).unwrap();
        let minus = QubitState::new(Complex64::new(h, 0.0), Complex64::new(0.0, -h)).unwrap();
        Self {
            vectors: [plus, minus],
        }
    }

    pub fn vectors(&self) -> &[QubitState; 2] {
        &self.vectors
    }

    pub fn vector(&self, outcome: u8) -> &QubitState {
        &self.vectors[usize::from(outcome & 1)]
    }
}

/// Result of [`measure_projective`].
#[derive(Clone, Debug, PartialEq)]
pub struct Measured {
    pub outcome: u8,
    /// Post-measurement state on the full register, renormalised.
    pub collapsed: StateVector,
    /// Born probability of `outcome`.
    pub probability: f64,
}

/// Measures `qubit` in `basis`, sampling the outcome from the Born rule.
pub fn measure_projective<R: Rng + ?Sized>(
    state: &StateVector,
    qubit: usize,
    basis: &MeasurementBasis,
    rng: &mut R,
) -> Result<Measured> {
    let p0 = branch_probability(state, qubit, basis.vector(0))?;
    let outcome = if rng.random::<f64>() < p0 { 0 } else { 1 };
    let (probability, collapsed) = branch(state, qubit, basis, outcome)?;
    Ok(Measured {
        outcome,
        collapsed,
        probability,
    })
}

/// The post-measurement state for a chosen `outcome`, with its Born probability.
pub fn branch(
    state: &StateVector,
    qubit: usize,
    basis: &MeasurementBasis,
    outcome: u8,
) -> Result<(f64, StateVector)> {
    if outcome > 1 {
        return invalid(format!("single-qubit outcome must be 0 or 1, got {outcome}"));
    }
    let vector = basis.vector(outcome);
    let (prob, rest) = project_remaining(state, qubit, vector)?;
    if prob <= 0.0 {
        return Err(Error::Internal(format!(
            "sampled a zero-probability branch (qubit {qubit}, outcome {outcome})"
        )));
    }
    let norm = prob.sqrt();
    let n = state.num_qubits();
    let shift = n - 1 - qubit;
    let low_mask = (1usize << shift) - 1;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); state.dim()];
    for (r, a) in rest.iter().enumerate() {
        let i0 = ((r & !low_mask) << 1) | (r & low_mask);
        amplitudes[i0] = a * vector.alpha() / norm;
        amplitudes[i0 | (1 << shift)] = a * vector.beta() / norm;
    }
    Ok((prob, StateVector::from_amplitudes(amplitudes)?))
}

fn branch_probability(state: &StateVector, qubit: usize, vector: &QubitState) -> Result<f64> {
    project_remaining(state, qubit, vector).map(|(p, _)| p)
}

fn project_remaining(
    state: &StateVector,
    qubit: usize,
    vector: &QubitState,
) -> Result<(f64, Vec<Complex64>)> {
    if qubit >= state.num_qubits() {
        return invalid(format!("qubit {qubit} out of range"));
    }
    if state.num_qubits() == 1 {
        let amp = vector.inner(&QubitState::new(state.amplitudes()[0], state.amplitudes()[1])?);
        return Ok((amp.norm_sqr(), vec![amp]));
    }
    state.project_out(qubit, vector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_in_computational_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = StateVector::basis(1, 0).unwrap();
        for _ in 0..20 {
            let m = measure_projective(&s, 0, &MeasurementBasis::computational(), &mut rng).unwrap();
            assert_eq!(m.outcome, 0);
            assert_abs_diff_eq!(m.probability, 1.0);
        }
    }

    #[test]
    fn zero_in_circular_basis_is_fair() {
        let s = StateVector::basis(1, 0).unwrap();
        let basis = MeasurementBasis::circular();
        let (p0, _) = branch(&s, 0, &basis, 0).unwrap();
        let (p1, _) = branch(&s, 0, &basis, 1).unwrap();
        assert_abs_diff_eq!(p0, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p1, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_probability_branch_is_internal_error() {
        let s = StateVector::basis(2, 0).unwrap();
        let r = branch(&s, 1, &MeasurementBasis::computational(), 1);
        assert!(matches!(r, Err(Error::Internal(_))));
    }

    #[test]
    fn non_orthogonal_basis_rejected() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = QubitState::real(h, h).unwrap();
        assert!(matches!(
            MeasurementBasis::new(QubitState::zero(), plus),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn collapse_is_renormalised_product() {
        // (|00> + |11>)/sqrt2, measure qubit 0 -> |00> or |11>
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        let bell = StateVector::from_amplitudes(vec![Complex64::new(h, 0.0), z, z, Complex64::new(h, 0.0)])
            .unwrap();
        let (p, s) = branch(&bell, 0, &MeasurementBasis::computational(), 1).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
        assert_eq!(s, StateVector::basis(2, 0b11).unwrap());
    }
}
