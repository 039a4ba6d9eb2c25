//! Collective spin measurements on the compressed register.
//!
//! The four basis states of the compressed pair are the symmetric three-qubit states,
//! i.e. an effective spin-3/2 particle:
//!
//! | pair | m    | estimate m/3 |
//! |------|------|--------------|
//! | `00` | +3/2 | +1/2         |
//! | `01` | +1/2 | +1/6         |
//! | `10` | -1/2 | -1/6         |
//! | `11` | -3/2 | -1/2         |
//!
//! Measuring the spin along an axis `n` means rotating `n.J` to `J_z` with
//! [`basis_change`] and reading both qubits in the computational basis.
//!
//! Axis convention: `polar` is measured from `+Z`, `azimuth` from `+X` towards `+Y`;
//! the spin-up state along the axis is `cos(polar/2)|0> + e^{i azimuth} sin(polar/2)|1>`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{invalid, Result};
use crate::qstate::{QubitState, StateVector, Unitary};
use crate::schur::binomial;

/// Single-shot estimates `m/3` in outcome order.
pub const ESTIMATES: [f64; 4] = [0.5, 1.0 / 6.0, -1.0 / 6.0, -0.5];

/// A measurement axis on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinAxis {
    polar: f64,
    azimuth: f64,
}

impl SpinAxis {
    pub const X: SpinAxis = SpinAxis {
        polar: FRAC_PI_2,
        azimuth: 0.0,
    };
    pub const Y: SpinAxis = SpinAxis {
        polar: FRAC_PI_2,
        azimuth: FRAC_PI_2,
    };
    pub const Z: SpinAxis = SpinAxis {
        polar: 0.0,
        azimuth: 0.0,
    };

    /// `polar` must lie in `[0, pi]`; `azimuth` is wrapped into `[0, 2 pi)`.
    /// At the poles the azimuth is meaningless and is stored as 0.
    pub fn new(polar: f64, azimuth: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&polar) || !azimuth.is_finite() {
            return invalid(format!(
                "axis angles out of range: polar {polar} (need [0, pi]), azimuth {azimuth}"
            ));
        }
        let azimuth = if polar == 0.0 || polar == PI {
            0.0
        } else {
            azimuth.rem_euclid(TAU)
        };
        Ok(Self { polar, azimuth })
    }

    pub fn polar(&self) -> f64 {
        self.polar
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    /// Unit vector `(nx, ny, nz)`.
    pub fn direction(&self) -> [f64; 3] {
        let (sp, cp) = self.polar.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [sp * ca, sp * sa, cp]
    }

    /// Spin-up eigenstate of `n.sigma`.
    pub fn up_state(&self) -> QubitState {
        QubitState::from_bloch(self.polar, self.azimuth)
    }

    /// Spin-down eigenstate `sin(polar/2)|0> - e^{i azimuth} cos(polar/2)|1>`.
    pub fn down_state(&self) -> QubitState {
        let (s, c) = (self.polar / 2.0).sin_cos();
        QubitState::new(Complex64::new(s, 0.0), -Complex64::from_polar(c, self.azimuth))
            .expect("unit vector")
    }
}

/// One outcome of a collective spin-3/2 measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollectiveOutcome {
    /// Basis index of the pair readout (`0b00..0b11`).
    pub index: usize,
    /// `2m`, one of `3, 1, -1, -3`.
    pub twice_m: i8,
    /// `m / 3`.
    pub estimate: f64,
    pub probability: f64,
}

impl CollectiveOutcome {
    pub fn m(&self) -> f64 {
        f64::from(self.twice_m) / 2.0
    }
}

/// The fixed relabelling of pair basis states as spin-3/2 projections:
/// `(basis index, 2m)`.
pub fn spin32_basis_map() -> [(usize, i8); 4] {
    [(0b00, 3), (0b01, 1), (0b10, -1), (0b11, -3)]
}

/// `(J_x, J_y, J_z)` for spin `n/2` in the basis `m = n/2, n/2 - 1, ..., -n/2`
/// (Condon-Shortley phases, real positive ladder elements).
pub fn spin_operators(n_copies: usize) -> [DMatrix<Complex64>; 3] {
    let dim = n_copies + 1;
    let j = n_copies as f64 / 2.0;
    let m = |i: usize| j - i as f64;
    let mut raise = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 1..dim {
        // J+ |m_i> = sqrt(j(j+1) - m(m+1)) |m_{i-1}>
        raise[(i - 1, i)] = Complex64::new((j * (j + 1.0) - m(i) * (m(i) + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let jx = (&raise + &lower) * Complex64::new(0.5, 0.0);
    let jy = (&raise - &lower) * Complex64::new(0.0, -0.5);
    let jz = DMatrix::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::new(m(r), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    [jx, jy, jz]
}

/// `n.J` for the effective spin-3/2 particle.
pub fn collective_operator(axis: &SpinAxis) -> DMatrix<Complex64> {
    collective_operator_n(3, axis)
}

/// `n.J` for spin `n_copies/2`.
pub fn collective_operator_n(n_copies: usize, axis: &SpinAxis) -> DMatrix<Complex64> {
    let [jx, jy, jz] = spin_operators(n_copies);
    let [nx, ny, nz] = axis.direction();
    jx * Complex64::new(nx, 0.0) + jy * Complex64::new(ny, 0.0) + jz * Complex64::new(nz, 0.0)
}

/// Rows are the conjugated eigenvectors of `n.J` for spin `n_copies/2`, ordered from
/// `m = +n/2` down, each phase-fixed so its first nonzero entry is real positive.
///
/// Eigenvector `k` is the symmetrised product of `n - k` copies of the axis spin-up
/// state and `k` copies of spin-down, expressed in the Dicke basis.
pub fn rotated_dicke_basis(n_copies: usize, axis: &SpinAxis) -> DMatrix<Complex64> {
    let dim = n_copies + 1;
    let (up, down) = (axis.up_state(), axis.down_state());
    let mut basis = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        // generating polynomial (u0 + u1 x)^(n-k) (w0 + w1 x)^k
        let mut poly = vec![Complex64::new(1.0, 0.0)];
        let factors = std::iter::repeat_n(up, n_copies - k).chain(std::iter::repeat_n(down, k));
        for f in factors {
            let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
            for (i, p) in poly.iter().enumerate() {
                next[i] += p * f.alpha();
                next[i + 1] += p * f.beta();
            }
            poly = next;
        }
        let mut row: Vec<Complex64> = poly
            .iter()
            .enumerate()
            .map(|(j, c)| c / binomial(n_copies, j).sqrt())
            .collect();
        let norm = row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let lead = row
            .iter()
            .find(|c| c.norm() > 1e-12 * norm)
            .copied()
            .unwrap_or(Complex64::new(1.0, 0.0));
        let fix = lead.conj() / lead.norm();
        for (j, c) in row.iter_mut().enumerate() {
            // row = conj(eigenvector), first nonzero entry real positive
            *c = (*c * fix / norm).conj();
            basis[(k, j)] = *c;
        }
    }
    basis
}

/// The 4x4 basis change that turns a collective measurement along `axis` into a
/// computational-basis readout of the pair.
pub fn basis_change(axis: &SpinAxis) -> Unitary {
    Unitary::new(rotated_dicke_basis(3, axis)).expect("eigenbasis of a Hermitian operator")
}

/// Born probabilities of `m = +3/2, +1/2, -1/2, -3/2` along `axis`.
pub fn outcome_distribution(state: &StateVector, axis: &SpinAxis) -> Result<[f64; 4]> {
    if state.num_qubits() != 2 {
        return invalid(format!("collective measurement needs the 2-qubit pair, got {} qubits", state.num_qubits()));
    }
    let rotated = basis_change(axis).apply_to(state.amplitudes())?;
    let mut probs = [0.0; 4];
    for (p, a) in probs.iter_mut().zip(&rotated) {
        *p = a.norm_sqr();
    }
    Ok(probs)
}

/// Samples one collective measurement along `axis`.
pub fn sample_outcome<R: Rng + ?Sized>(
    state: &StateVector,
    axis: &SpinAxis,
    rng: &mut R,
) -> Result<CollectiveOutcome> {
    let probs = outcome_distribution(state, axis)?;
    Ok(outcome_from_distribution(&probs, rng))
}

/// Samples an outcome index from a 4-bin distribution.
pub fn outcome_from_distribution<R: Rng + ?Sized>(probs: &[f64; 4], rng: &mut R) -> CollectiveOutcome {
    let index = sample_index(probs, rng.random::<f64>());
    let (_, twice_m) = spin32_basis_map()[index];
    CollectiveOutcome {
        index,
        twice_m,
        estimate: ESTIMATES[index],
        probability: probs[index],
    }
}

/// Inverse-CDF lookup; never returns a zero-probability bin.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i;
        acc += p;
        if u < acc {
            return i;
        }
    }
    last
}

/// X-axis distribution with dark-port leakage `p`: the readout of the final
/// interferometric stage (qubit 0 of the pair after the X basis change) reports the
/// orthogonal port with probability `p`, so each outcome mixes with its partner that
/// differs in that bit.
pub fn leaky_x_distribution(state: &StateVector, p: f64) -> Result<[f64; 4]> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("leakage probability must lie in [0, 1], got {p}"));
    }
    let ideal = outcome_distribution(state, &SpinAxis::X)?;
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (1.0 - p) * ideal[i] + p * ideal[i ^ 0b10];
    }
    Ok(out)
}

/// Mean and variance of the single-shot estimate `m/3` under `probs`.
pub fn estimate_moments(probs: &[f64; 4]) -> (f64, f64) {
    let mean: f64 = probs.iter().zip(ESTIMATES).map(|(p, e)| p * e).sum();
    let second: f64 = probs.iter().zip(ESTIMATES).map(|(p, e)| p * e * e).sum();
    (mean, (second - mean * mean).max(0.0))
}

/// `<n.sigma/2>` for a single copy.
pub fn spin_expectation(psi: &QubitState, axis: &SpinAxis) -> f64 {
    let r = psi.bloch_vector();
    let n = axis.direction();
    0.5 * (r[0] * n[0] + r[1] * n[1] + r[2] * n[2])
}

/// Single-copy spin variance `1/4 - <n.sigma/2>^2`.
pub fn single_copy_variance(psi: &QubitState, axis: &SpinAxis) -> f64 {
    let s = spin_expectation(psi, axis);
    (0.25 - s * s).max(0.0)
}

/// Probability that one copy of `psi` reads spin-up along `axis`.
pub fn spin_up_probability(psi: &QubitState, axis: &SpinAxis) -> f64 {
    axis.up_state().inner(psi).norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schur::compress3;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn theta_state(theta_deg: f64) -> QubitState {
        let t = (2.0 * theta_deg).to_radians();
        QubitState::real(t.cos(), t.sin()).unwrap()
    }

    #[test]
    fn basis_map_matches_relabelling() {
        let map = spin32_basis_map();
        assert_eq!(map[0], (0b00, 3));
        assert_eq!(map[3], (0b11, -3));
        assert_abs_diff_eq!(ESTIMATES[map[1].0], 1.0 / 6.0);
        for (idx, twice_m) in map {
            assert_abs_diff_eq!(ESTIMATES[idx], f64::from(twice_m) / 6.0, epsilon = 1e-16);
        }
    }

    #[test]
    fn jz_is_diagonal() {
        let op = collective_operator(&SpinAxis::Z);
        for (i, m) in [1.5, 0.5, -0.5, -1.5].iter().enumerate() {
            assert_abs_diff_eq!(op[(i, i)].re, *m);
        }
        assert_abs_diff_eq!((op.sum() - Complex64::new(0.0, 0.0)).norm(), 0.0);
    }

    #[test]
    fn angular_momentum_commutator() {
        let [jx, jy, jz] = spin_operators(3);
        let comm = &jx * &jy - &jy * &jx;
        let expected = jz * Complex64::i();
        assert!((comm - expected).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn z_basis_change_is_identity() {
        let b = basis_change(&SpinAxis::Z);
        assert!(b.max_deviation(&Unitary::identity(4).unwrap()) < 1e-12);
    }

    #[test]
    fn x_basis_change_magnitudes() {
        let b = basis_change(&SpinAxis::X);
        let r3 = 3f64.sqrt();
        let expected = [1.0, r3, r3, 1.0].map(|x| x / (2.0 * 2f64.sqrt()));
        for (row, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(b.matrix()[(row, 0)].norm(), *e, epsilon = 1e-12);
        }
    }

    #[test]
    fn basis_change_diagonalises() {
        for axis in [SpinAxis::X, SpinAxis::Y, SpinAxis::new(1.1, 4.0).unwrap()] {
            let b = basis_change(&axis);
            let d = b.matrix() * collective_operator(&axis) * b.matrix().adjoint();
            for r in 0..4 {
                for c in 0..4 {
                    let want = if r == c { 1.5 - r as f64 } else { 0.0 };
                    assert!((d[(r, c)] - Complex64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rows_have_positive_leading_entry() {
        let b = basis_change(&SpinAxis::new(2.0, 1.0).unwrap());
        for r in 0..4 {
            let lead = (0..4).map(|c| b.matrix()[(r, c)]).find(|z| z.norm() > 1e-12).unwrap();
            assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
        }
    }

    #[test]
    fn distribution_examples() {
        let p = outcome_distribution(&compress3(&QubitState::zero()), &SpinAxis::Z).unwrap();
        assert_eq!(p, [1.0, 0.0, 0.0, 0.0]);
        let p = outcome_distribution(&compress3(&theta_state(13.5)), &SpinAxis::Z).unwrap();
        for (got, want) in p.iter().zip([0.50036, 0.38971, 0.10118, 0.00876]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-5);
        }
        let plus = QubitState::real(FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        let p = outcome_distribution(&compress3(&plus), &SpinAxis::X).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-12);
        assert!(outcome_distribution(&StateVector::basis(3, 0).unwrap(), &SpinAxis::Z).is_err());
    }

    #[test]
    fn degenerate_axis_ignores_azimuth() {
        let a = SpinAxis::new(0.0, 2.0).unwrap();
        assert_eq!(a, SpinAxis::Z);
        assert!(SpinAxis::new(-0.1, 0.0).is_err());
        assert!(SpinAxis::new(4.0, 0.0).is_err());
        let wrapped = SpinAxis::new(1.0, -FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(wrapped.azimuth(), 1.5 * PI, epsilon = 1e-15);
    }

    #[test]
    fn sampling_is_deterministic_and_respects_support() {
        let s = compress3(&QubitState::zero());
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let o = sample_outcome(&s, &SpinAxis::Z, &mut rng).unwrap();
            assert_eq!(o.twice_m, 3);
            assert_eq!(o.estimate, 0.5);
        }
        let s = compress3(&theta_state(13.5));
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| sample_outcome(&s, &SpinAxis::Y, &mut rng).unwrap().index)
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(4), draw(4));
    }

    #[test]
    fn leakage_examples() {
        let s = compress3(&theta_state(13.5));
        assert_eq!(
            leaky_x_distribution(&s, 0.0).unwrap(),
            outcome_distribution(&s, &SpinAxis::X).unwrap()
        );
        assert!(leaky_x_distribution(&s, 1.5).is_err());
        assert!(leaky_x_distribution(&s, f64::NAN).is_err());
        // at 22.5 degrees the ideal X variance vanishes but leakage makes it positive
        let s = compress3(&theta_state(22.5));
        let (_, ideal) = estimate_moments(&outcome_distribution(&s, &SpinAxis::X).unwrap());
        let (_, leaky) = estimate_moments(&leaky_x_distribution(&s, 0.015).unwrap());
        assert!(ideal < 1e-15);
        assert_abs_diff_eq!(leaky, 0.015 * 0.985 * (4.0 / 9.0), epsilon = 1e-12);
    }

    #[test]
    fn single_copy_variance_z_matches_closed_form() {
        for deg in [0.0, 4.5, 13.5, 22.5, 31.0] {
            let t = (2.0f64 * deg).to_radians();
            let v = single_copy_variance(&theta_state(deg), &SpinAxis::Z);
            assert_abs_diff_eq!(v, (t.cos() * t.sin()).powi(2), epsilon = 1e-15);
        }
    }
}
