//! Statistical experiments on the compressed register and its baselines.
//!
//! All spin quantities are in units where a single-copy outcome is `+-1/2`.
//! Every sampled experiment takes a [`RootSeed`](crate::rng::RootSeed) and splits its
//! work into fixed-size units with their own streams, so results are reproducible
//! and independent of the rayon pool size.

mod average;
mod mle;
mod trials;

pub use average::{axis_variances, average_variance, gauss_legendre, sphere_average, sphere_average_variance};
pub use mle::{
    fit_k, likelihood_first, likelihood_pair, maximize_likelihood, mle_2plus1, mle_mse_sweep, play_game,
    GameOutcome, LikelihoodMaximizer, MsePoint, MseSweep, PairTally, MLE_GRID_POINTS,
};
pub use trials::{
    histogram, run_trial_ensemble, shot_counts, variance_sweep, HistogramBin, Mode, ShotModel, SweepPoint, TrialEnsemble,
    TrialStats,
};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Result};
use crate::qstate::QubitState;

/// Stream tags, one per experiment family.
pub(crate) const TAG_TRIALS: u16 = 1;
pub(crate) const TAG_SHOTS: u16 = 2;
pub(crate) const TAG_MLE: u16 = 3;

/// The real-parametrised input `cos(2 theta)|0> + e^{i phase} sin(2 theta)|1>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaState {
    pub theta: f64,
    pub phase: f64,
}

impl ThetaState {
    pub fn new(theta: f64, phase: f64) -> Result<Self> {
        if !theta.is_finite() || !phase.is_finite() {
            return invalid(format!("theta and phase must be finite, got {theta}, {phase}"));
        }
        Ok(Self { theta, phase })
    }

    pub fn qubit(&self) -> QubitState {
        let (s, c) = (2.0 * self.theta).sin_cos();
        QubitState::new(
            num_complex::Complex64::new(c, 0.0),
            num_complex::Complex64::from_polar(s, self.phase),
        )
        .expect("unit vector")
    }

    /// `<Z/2> = cos(4 theta)/2`, whatever the phase.
    pub fn z_true(&self) -> f64 {
        0.5 * (4.0 * self.theta).cos()
    }

    /// Single-copy Z variance `cos^2(2 theta) sin^2(2 theta)`.
    pub fn v1_z(&self) -> f64 {
        let (s, c) = (2.0 * self.theta).sin_cos();
        c * c * s * s
    }
}

/// `(2 m1 + m2)/3` for pair readouts `m1, m2 = +-1/2`.
pub fn estimator_zcomp(m1: f64, m2: f64) -> f64 {
    (2.0 * m1 + m2) / 3.0
}

/// `(m1 + m2 + m3)/3` for three single-copy readouts.
pub fn estimator_zdirect(m1: f64, m2: f64, m3: f64) -> f64 {
    (m1 + m2 + m3) / 3.0
}

/// Two-sided acceptance interval at confidence `level` for the sample variance of
/// `dof + 1` normal draws with true variance `variance`.
pub fn chi_squared_band(variance: f64, dof: usize, level: f64) -> Result<(f64, f64)> {
    if dof == 0 || !(0.0 < level && level < 1.0) {
        return invalid(format!("need dof >= 1 and level in (0, 1), got {dof}, {level}"));
    }
    let chi = ChiSquared::new(dof as f64).map_err(|e| crate::Error::Internal(e.to_string()))?;
    let tail = 0.5 * (1.0 - level);
    let k = dof as f64;
    Ok((variance * chi.inverse_cdf(tail) / k, variance * chi.inverse_cdf(1.0 - tail) / k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collective::{outcome_distribution, SpinAxis, ESTIMATES};
    use crate::schur::compress3;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zcomp_matches_outcome_labels() {
        assert_eq!(estimator_zcomp(0.5, 0.5), 0.5);
        assert_abs_diff_eq!(estimator_zcomp(-0.5, 0.5), -1.0 / 6.0, epsilon = 1e-15);
        // pair bit b -> readout 1/2 - b
        for (idx, want) in ESTIMATES.iter().enumerate() {
            let m1 = 0.5 - (idx >> 1) as f64;
            let m2 = 0.5 - (idx & 1) as f64;
            assert_abs_diff_eq!(estimator_zcomp(m1, m2), *want, epsilon = 1e-15);
        }
    }

    #[test]
    fn zdirect_values() {
        assert_eq!(estimator_zdirect(0.5, 0.5, 0.5), 0.5);
        assert_abs_diff_eq!(estimator_zdirect(0.5, 0.5, -0.5), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn direct_tally_equals_compressed_distribution() {
        for k in 0..10 {
            let s = ThetaState::new(0.1 * k as f64, 0.3 * k as f64).unwrap();
            let psi = s.qubit();
            let probs = outcome_distribution(&compress3(&psi), &SpinAxis::Z).unwrap();
            let p = psi.alpha().norm_sqr();
            let tally = [p.powi(3), 3.0 * p * p * (1.0 - p), 3.0 * p * (1.0 - p).powi(2), (1.0 - p).powi(3)];
            for (a, b) in probs.iter().zip(tally) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn theta_state_moments() {
        let s = ThetaState::new(13.5f64.to_radians(), 0.7).unwrap();
        assert_abs_diff_eq!(s.v1_z(), 0.16363, epsilon = 1e-5);
        let bloch = s.qubit().bloch_vector();
        assert_abs_diff_eq!(bloch[2] / 2.0, s.z_true(), epsilon = 1e-15);
        assert!(ThetaState::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn chi_squared_band_brackets_truth() {
        let (lo, hi) = chi_squared_band(2.0, 249, 0.99).unwrap();
        assert!(lo < 2.0 && 2.0 < hi);
        // 0.5% and 99.5% quantiles of chi2(249)
        assert_abs_diff_eq!(lo * 249.0 / 2.0, 195.27590689589888, epsilon = 1e-6);
        assert_abs_diff_eq!(hi * 249.0 / 2.0, 310.2308277026782, epsilon = 1e-6);
        assert!(chi_squared_band(1.0, 0, 0.9).is_err());
    }
}
