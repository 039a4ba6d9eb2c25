use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::collective::{collective_operator_n, single_copy_variance, SpinAxis};
use crate::error::{invalid, Result};
use crate::qstate::QubitState;

/// Single-copy spin variances along X, Y and Z.
pub fn axis_variances(psi: &QubitState) -> [f64; 3] {
    [SpinAxis::X, SpinAxis::Y, SpinAxis::Z].map(|a| single_copy_variance(psi, &a))
}

/// `(Vx + Vy + Vz) / 3`, the variance averaged over uniformly random axes.
pub fn average_variance(psi: &QubitState) -> f64 {
    axis_variances(psi).iter().sum::<f64>() / 3.0
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                (p0, p1) = (p1, ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k);
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `(1/4 pi) \int f(n) dOmega` with Gauss-Legendre in `cos(polar)` and the trapezoid
/// rule (`2 nodes` points) in azimuth.
pub fn sphere_average<F>(nodes: usize, mut f: F) -> Result<f64>
where
    F: FnMut(&SpinAxis) -> Result<f64>,
{
    if nodes == 0 {
        return invalid("quadrature needs at least one node");
    }
    let azimuths = 2 * nodes;
    let mut total = 0.0;
    for (x, w) in gauss_legendre(nodes) {
        let mut ring = 0.0;
        for j in 0..azimuths {
            let axis = SpinAxis::new(x.clamp(-1.0, 1.0).acos(), TAU * j as f64 / azimuths as f64)?;
            ring += f(&axis)?;
        }
        total += 0.5 * w * ring / azimuths as f64;
    }
    Ok(total)
}

/// Sphere average of the single-copy variance `<S_n^2> - <S_n>^2`, computed from the
/// spin-1/2 operator along each quadrature axis.
pub fn sphere_average_variance(psi: &QubitState, nodes: usize) -> Result<f64> {
    let v = DVector::from_vec(vec![psi.alpha(), psi.beta()]);
    sphere_average(nodes, |axis| {
        let s = collective_operator_n(1, axis);
        let sv = &s * &v;
        let first: Complex64 = v.dotc(&sv);
        let second: Complex64 = sv.dotc(&sv);
        Ok(second.re - first.re * first.re)
    })
}
