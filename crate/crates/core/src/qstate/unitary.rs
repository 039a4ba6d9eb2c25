use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ALGEBRAIC_TOL;
use crate::error::{invalid, Result};

/// A `dim x dim` unitary, `dim` a power of two, checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    matrix: DMatrix<Complex64>,
}

impl Unitary {
    /// Fails unless the matrix is square, power-of-two sized, and `U^dag U = I` with
    /// every entry within `1e-12`.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || dim < 2 || !dim.is_power_of_two() {
            return invalid(format!(
                "unitary must be square with power-of-two dimension, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        let u = Self { matrix };
        let dev = u.unitarity_deviation();
        if !(dev <= ALGEBRAIC_TOL) {
            return invalid(format!("matrix is not unitary (max |U^dag U - I| = {dev:e})"));
        }
        Ok(u)
    }

    /// Row-major constructor.
    pub fn from_rows(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return invalid(format!("expected {} entries, got {}", dim * dim, entries.len()));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let entries: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_rows(dim, &entries)
    }

    /// Diagonal unitary from unit-modulus entries.
    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries)))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Unitary {
        Self {
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self * other` (apply `other` first).
    pub fn compose(&self, other: &Unitary) -> Result<Unitary> {
        if self.dim() != other.dim() {
            return invalid(format!("dimension mismatch: {} vs {}", self.dim(), other.dim()));
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// `self (x) other`.
    pub fn kron(&self, other: &Unitary) -> Unitary {
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// `U v` for a vector of matching dimension.
    pub fn apply_to(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim() {
            return invalid(format!("vector length {} vs unitary dimension {}", v.len(), self.dim()));
        }
        Ok((0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.matrix[(r, c)] * v[c]).sum())
            .collect())
    }

    /// Largest entry of `|U^dag U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let dim = self.dim();
        let product = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                let expected = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((product[(r, c)] - Complex64::new(expected, 0.0)).norm());
            }
        }
        if worst.is_nan() {
            f64::INFINITY
        } else {
            worst
        }
    }

    /// Largest entry-wise distance to `other`.
    pub fn max_deviation(&self, other: &Unitary) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Standard gates.
pub mod gates {
    use super::Unitary;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn pauli_x() -> Unitary {
        Unitary::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).expect("X is unitary")
    }

    pub fn pauli_y() -> Unitary {
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        Unitary::from_rows(2, &[z, -i, i, z]).expect("Y is unitary")
    }

    pub fn pauli_z() -> Unitary {
        Unitary::from_real_rows(2, &[1.0, 0.0, 0.0, -1.0]).expect("Z is unitary")
    }

    pub fn hadamard() -> Unitary {
        let h = FRAC_1_SQRT_2;
        Unitary::from_real_rows(2, &[h, h, h, -h]).expect("H is unitary")
    }

    /// Two-qubit CNOT with the first qubit as control.
    pub fn cnot() -> Unitary {
        #[rustfmt::skip]
        let m = [
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        Unitary::from_real_rows(4, &m).expect("CNOT is unitary")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_unitary() {
        assert!(Unitary::from_real_rows(2, &[1.0, 1.0, 0.0, 1.0]).is_err());
        assert!(Unitary::from_real_rows(3, &[1.0; 9]).is_err());
        assert!(Unitary::from_real_rows(2, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn pauli_algebra() {
        let xy = gates::pauli_x().compose(&gates::pauli_y()).unwrap();
        // XY = iZ
        let iz = Unitary::diagonal(&[Complex64::i(), -Complex64::i()]).unwrap();
        assert!(xy.max_deviation(&iz) < 1e-15);
        let hh = gates::hadamard().compose(&gates::hadamard()).unwrap();
        assert!(hh.max_deviation(&Unitary::identity(2).unwrap()) < 1e-15);
    }

    #[test]
    fn kron_dimension() {
        let u = gates::hadamard().kron(&gates::cnot());
        assert_eq!(u.dim(), 8);
        assert_eq!(u.num_qubits(), 3);
        assert!(u.unitarity_deviation() < 1e-12);
    }
}
