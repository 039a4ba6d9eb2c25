//! The "2+1" maximum-likelihood baseline: two copies are kept and later read along Z,
//! the third is measured at once along a Haar-random axis. The Z expectation is then
//! estimated by maximising the joint likelihood of all three results.

use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

use super::{ThetaState, TAG_MLE};
use crate::error::{invalid, Result};
use crate::rng::{haar_direction, RootSeed};

/// Grid size of the coarse likelihood scan.
pub const MLE_GRID_POINTS: usize = 2001;
const GOLDEN_TOL: f64 = 1e-10;
/// Games per random stream in [`mle_mse_sweep`].
const GAME_CHUNK: usize = 1 << 14;

/// Result of the two Z readouts on the stored pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairTally {
    BothUp,
    Mixed,
    BothDown,
}

impl PairTally {
    pub fn from_ups(ups: usize) -> Self {
        match ups {
            2 => PairTally::BothUp,
            1 => PairTally::Mixed,
            _ => PairTally::BothDown,
        }
    }

    /// The tally as sorted outcome bits, `(0, 0)`, `(0, 1)` or `(1, 1)`.
    pub fn as_pair(self) -> (u8, u8) {
        match self {
            PairTally::BothUp => (0, 0),
            PairTally::Mixed => (0, 1),
            PairTally::BothDown => (1, 1),
        }
    }

    fn index(self) -> usize {
        match self {
            PairTally::BothUp => 0,
            PairTally::Mixed => 1,
            PairTally::BothDown => 2,
        }
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(-0.5..=0.5).contains(&z) {
        return invalid(format!("z must lie in [-1/2, 1/2], got {z}"));
    }
    Ok(())
}

fn half_sqrt(z: f64) -> f64 {
    0.5 * (1.0 - 4.0 * z * z).max(0.0).sqrt()
}

/// `up = 1/2 + z a + r b` with `a = cos(delta)`, `b = sin(delta) cos(epsilon)`.
fn first_raw(z: f64, r: f64, outcome: u8, a: f64, b: f64) -> f64 {
    let up = 0.5 + z * a + r * b;
    if outcome == 0 {
        up
    } else {
        1.0 - up
    }
}

/// Probability of the first (random-axis) result given `Z_true = z`.
pub fn likelihood_first(z: f64, outcome: u8, delta: f64, epsilon: f64) -> Result<f64> {
    check_z(z)?;
    if outcome > 1 {
        return invalid(format!("outcome must be 0 or 1, got {outcome}"));
    }
    Ok(first_raw(z, half_sqrt(z), outcome, delta.cos(), delta.sin() * epsilon.cos()))
}

/// Probability of the pair tally given `Z_true = z`.
pub fn likelihood_pair(z: f64, tally: PairTally) -> f64 {
    match tally {
        PairTally::BothUp => (0.5 + z).powi(2),
        PairTally::Mixed => 0.5 - 2.0 * z * z,
        PairTally::BothDown => (0.5 - z).powi(2),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameOutcome {
    pub first_outcome: u8,
    pub zz_tally: PairTally,
    /// Polar angle of the random axis.
    pub delta: f64,
    /// Azimuth assumed when maximising (the true one is unknown).
    pub epsilon: f64,
    pub z_mle: f64,
}

/// Grid-plus-golden-section maximiser with the grid terms precomputed.
#[derive(Clone, Debug)]
pub struct LikelihoodMaximizer {
    z: Vec<f64>,
    r: Vec<f64>,
    pair: [Vec<f64>; 3],
}

impl Default for LikelihoodMaximizer {
    fn default() -> Self {
        Self::with_grid(MLE_GRID_POINTS).expect("grid size >= 2")
    }
}

impl LikelihoodMaximizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_grid(points: usize) -> Result<Self> {
        if points < 2 {
            return invalid(format!("likelihood grid needs at least 2 points, got {points}"));
        }
        let z: Vec<f64> = (0..points).map(|k| -0.5 + k as f64 / (points - 1) as f64).collect();
        let r = z.iter().map(|&z| half_sqrt(z)).collect();
        let pair = [PairTally::BothUp, PairTally::Mixed, PairTally::BothDown]
            .map(|t| z.iter().map(|&z| likelihood_pair(z, t)).collect());
        Ok(Self { z, r, pair })
    }

    /// Argmax over `[-1/2, 1/2]` of `L_first(z; first, delta, epsilon) L_pair(z; tally)`.
    pub fn maximize(&self, first: u8, tally: PairTally, delta: f64, epsilon: f64) -> f64 {
        let (a, b) = (delta.cos(), delta.sin() * epsilon.cos());
        let pair = &self.pair[tally.index()];
        let f = |z: f64| first_raw(z, half_sqrt(z), first, a, b) * likelihood_pair(z, tally);

        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (k, ((&z, &r), &p)) in self.z.iter().zip(&self.r).zip(pair).enumerate() {
            let v = first_raw(z, r, first, a, b) * p;
            if v > best_v {
                best_v = v;
                best = k;
            }
        }

        let last = self.z.len() - 1;
        let (mut lo, mut hi) = (self.z[best.saturating_sub(1)], self.z[(best + 1).min(last)]);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > GOLDEN_TOL {
            if f1 < f2 {
                lo = x1;
                (x1, f1) = (x2, f2);
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                (x2, f2) = (x1, f1);
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            }
        }
        let refined = 0.5 * (lo + hi);
        if f(refined) > best_v {
            refined
        } else {
            self.z[best]
        }
    }
}

/// One-off maximisation with the default grid.
pub fn maximize_likelihood(first: u8, tally: PairTally, delta: f64, epsilon: f64) -> f64 {
    LikelihoodMaximizer::new().maximize(first, tally, delta, epsilon)
}

/// Plays one game against a state with `<Z/2> = z_true` and zero relative phase.
///
/// Draw order: axis polar and azimuth, first result, the two pair readouts, then the
/// azimuth guess used in the likelihood.
pub fn play_game<R: Rng + ?Sized>(z_true: f64, rng: &mut R, maximizer: &LikelihoodMaximizer) -> Result<GameOutcome> {
    check_z(z_true)?;
    let (delta, azimuth) = haar_direction(rng);
    let p0 = first_raw(z_true, half_sqrt(z_true), 0, delta.cos(), delta.sin() * azimuth.cos());
    let first_outcome = if rng.random::<f64>() < p0 { 0 } else { 1 };
    let p_up = 0.5 + z_true;
    let ups = (0..2).filter(|_| rng.random::<f64>() < p_up).count();
    let zz_tally = PairTally::from_ups(ups);
    let epsilon = rng.random::<f64>() * TAU;
    Ok(GameOutcome {
        first_outcome,
        zz_tally,
        delta,
        epsilon,
        z_mle: maximizer.maximize(first_outcome, zz_tally, delta, epsilon),
    })
}

pub fn mle_2plus1<R: Rng + ?Sized>(z_true: f64, rng: &mut R) -> Result<GameOutcome> {
    play_game(z_true, rng, &LikelihoodMaximizer::new())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MsePoint {
    pub theta: f64,
    pub z_true: f64,
    /// Single-copy Z variance at this theta.
    pub v1: f64,
    pub games: usize,
    pub mse: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MseSweep {
    pub points: Vec<MsePoint>,
    /// `K` minimising `sum (MSE - V1/K)^2`; `None` when every `V1` vanishes.
    pub k_fit: Option<f64>,
}

/// Least-squares `K` in `MSE ~ V1 / K`.
pub fn fit_k(points: &[MsePoint]) -> Option<f64> {
    let vv: f64 = points.iter().map(|p| p.v1 * p.v1).sum();
    let mv: f64 = points.iter().map(|p| p.mse * p.v1).sum();
    (mv > 0.0 && vv > 0.0).then(|| vv / mv)
}

/// Mean squared error of the 2+1 estimate over `samples` games per theta.
pub fn mle_mse_sweep(thetas: &[f64], samples: usize, seed: RootSeed) -> Result<MseSweep> {
    if samples == 0 {
        return invalid("samples must be positive");
    }
    let states = thetas
        .iter()
        .map(|&t| ThetaState::new(t, 0.0))
        .collect::<Result<Vec<_>>>()?;
    let maximizer = LikelihoodMaximizer::new();
    let chunks = samples.div_ceil(GAME_CHUNK);
    let units: Vec<(usize, usize)> = (0..thetas.len()).flat_map(|t| (0..chunks).map(move |c| (t, c))).collect();
    let sums: Vec<f64> = units
        .par_iter()
        .map(|&(t, c)| {
            let z_true = states[t].z_true();
            let mut rng = seed.substream(TAG_MLE, ((t as u64) << 32) | c as u64);
            let games = GAME_CHUNK.min(samples - c * GAME_CHUNK);
            let mut sum = 0.0;
            for _ in 0..games {
                let g = play_game(z_true, &mut rng, &maximizer)?;
                sum += (g.z_mle - z_true).powi(2);
            }
            Ok(sum)
        })
        .collect::<Result<_>>()?;
    let points: Vec<MsePoint> = states
        .iter()
        .enumerate()
        .map(|(t, s)| MsePoint {
            theta: s.theta,
            z_true: s.z_true(),
            v1: s.v1_z(),
            games: samples,
            mse: sums[t * chunks..(t + 1) * chunks].iter().sum::<f64>() / samples as f64,
        })
        .collect();
    let k_fit = fit_k(&points);
    Ok(MseSweep { points, k_fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn likelihood_first_examples() {
        assert_abs_diff_eq!(likelihood_first(0.3, 0, 0.0, 1.0).unwrap(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(likelihood_first(-0.2, 0, FRAC_PI_2, FRAC_PI_2).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(likelihood_first(0.5, 0, 1.0, 2.0).unwrap(), 0.5 + 1f64.cos() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(likelihood_first(-0.5, 1, 1.0, 2.0).unwrap(), 0.5 + 1f64.cos() / 2.0, epsilon = 1e-15);
        assert!(likelihood_first(0.6, 0, 0.0, 0.0).is_err());
        assert!(likelihood_first(0.1, 2, 0.0, 0.0).is_err());
    }

    #[test]
    fn likelihood_pair_examples() {
        assert_eq!(likelihood_pair(0.5, PairTally::BothUp), 1.0);
        assert_eq!(likelihood_pair(0.0, PairTally::BothUp), 0.25);
        assert_eq!(likelihood_pair(0.0, PairTally::Mixed), 0.5);
        assert_eq!(likelihood_pair(0.0, PairTally::BothDown), 0.25);
    }

    #[test]
    fn maximizer_examples() {
        assert_eq!(maximize_likelihood(0, PairTally::BothUp, 0.0, 0.3), 0.5);
        assert_eq!(maximize_likelihood(1, PairTally::BothDown, 0.0, 0.3), -0.5);
        let z = maximize_likelihood(0, PairTally::Mixed, FRAC_PI_2, FRAC_PI_2);
        assert_abs_diff_eq!(z, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn fit_k_recovers_scale() {
        let pts: Vec<MsePoint> = (1..5)
            .map(|k| {
                let v1 = 0.05 * k as f64;
                MsePoint {
                    theta: 0.0,
                    z_true: 0.0,
                    v1,
                    games: 1,
                    mse: v1 / 2.5,
                }
            })
            .collect();
        assert_abs_diff_eq!(fit_k(&pts).unwrap(), 2.5, epsilon = 1e-12);
        assert_eq!(fit_k(&[]), None);
    }

    #[test]
    fn small_sweep_is_reproducible() {
        let a = mle_mse_sweep(&[0.0, 0.3], 3000, RootSeed(11)).unwrap();
        let b = mle_mse_sweep(&[0.0, 0.3], 3000, RootSeed(11)).unwrap();
        assert_eq!(a, b);
        assert!(a.points[0].mse > 0.0);
    }
}
