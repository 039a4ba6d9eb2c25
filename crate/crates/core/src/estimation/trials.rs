use rand::Rng;
use rayon::prelude::*;

use super::{ThetaState, TAG_SHOTS, TAG_TRIALS};
use crate::collective::{leaky_x_distribution, outcome_distribution, sample_index, single_copy_variance, SpinAxis, ESTIMATES};
use crate::error::{invalid, Result};
use crate::rng::RootSeed;
use crate::schur::{binomial, compress3};

/// Shots per random stream in sampled sweeps.
const SHOT_CHUNK: usize = 1 << 16;

/// How one single-shot estimate is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Collective spin-3/2 measurement of the compressed pair, estimate `m/3`.
    Compressed,
    /// Three copies measured one by one, estimate the mean readout.
    Direct3,
    /// Two copies measured one by one.
    Direct2,
}

impl Mode {
    pub fn copies(self) -> usize {
        match self {
            Mode::Compressed | Mode::Direct3 => 3,
            Mode::Direct2 => 2,
        }
    }

    /// Variance of one estimate given the single-copy variance `v1`.
    pub fn shot_variance(self, v1: f64) -> f64 {
        v1 / self.copies() as f64
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Compressed => "compressed",
            Mode::Direct3 => "direct3",
            Mode::Direct2 => "direct2",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Sampler {
    /// One draw from `probabilities`.
    Categorical,
    /// `copies` independent spin readouts; the bin is the number of down results.
    Copies { copies: usize, p_up: f64 },
}

/// Discrete distribution of single-shot estimates, with a sampler that mirrors the
/// physical procedure.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotModel {
    estimates: Vec<f64>,
    probabilities: Vec<f64>,
    sampler: Sampler,
}

impl ShotModel {
    pub fn new(state: &ThetaState, axis: &SpinAxis, mode: Mode) -> Result<Self> {
        let psi = state.qubit();
        match mode {
            Mode::Compressed => Ok(Self::categorical(outcome_distribution(&compress3(&psi), axis)?)),
            Mode::Direct3 | Mode::Direct2 => {
                let copies = mode.copies();
                let p_up = axis.up_state().inner(&psi).norm_sqr().clamp(0.0, 1.0);
                let estimates = (0..=copies)
                    .map(|k| (copies as f64 - 2.0 * k as f64) / (2.0 * copies as f64))
                    .collect();
                let probabilities = (0..=copies)
                    .map(|k| binomial(copies, k) * p_up.powi((copies - k) as i32) * (1.0 - p_up).powi(k as i32))
                    .collect();
                Ok(Self {
                    estimates,
                    probabilities,
                    sampler: Sampler::Copies { copies, p_up },
                })
            }
        }
    }

    /// Compressed X measurement with dark-port leakage `p`.
    pub fn leaky_x(state: &ThetaState, p: f64) -> Result<Self> {
        Ok(Self::categorical(leaky_x_distribution(&compress3(&state.qubit()), p)?))
    }

    fn categorical(probs: [f64; 4]) -> Self {
        Self {
            estimates: ESTIMATES.to_vec(),
            probabilities: probs.to_vec(),
            sampler: Sampler::Categorical,
        }
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean(&self) -> f64 {
        self.estimates.iter().zip(&self.probabilities).map(|(e, p)| e * p).sum()
    }

    /// `k`-th central moment of one estimate.
    pub fn central_moment(&self, k: i32) -> f64 {
        let mu = self.mean();
        self.estimates
            .iter()
            .zip(&self.probabilities)
            .map(|(e, p)| p * (e - mu).powi(k))
            .sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        self.central_moment(2).max(0.0)
    }

    /// Draws one shot and returns its bin.
    pub fn sample_bin<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self.sampler {
            Sampler::Categorical => sample_index(&self.probabilities, rng.random::<f64>()),
            Sampler::Copies { copies, p_up } => (0..copies).filter(|_| rng.random::<f64>() >= p_up).count(),
        }
    }

    fn sample_counts<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.estimates.len()];
        for _ in 0..shots {
            counts[self.sample_bin(rng)] += 1;
        }
        counts
    }

    /// Sample mean and unbiased sample variance of the estimates behind `counts`.
    pub fn count_moments(&self, counts: &[u64]) -> (f64, f64) {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return (f64::NAN, f64::NAN);
        }
        let mean = counts.iter().zip(&self.estimates).map(|(&c, e)| c as f64 * e).sum::<f64>() / n as f64;
        if n == 1 {
            return (mean, 0.0);
        }
        let ss: f64 = counts
            .iter()
            .zip(&self.estimates)
            .map(|(&c, e)| c as f64 * (e - mean).powi(2))
            .sum();
        (mean, ss / (n - 1) as f64)
    }
}

/// Aggregate of an ensemble of trials.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub n_trials: usize,
    pub runs_per_trial: usize,
    /// Mean of the trial means.
    pub mean: f64,
    /// Unbiased sample variance of the trial means.
    pub variance_or_mse: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialEnsemble {
    pub stats: TrialStats,
    pub trial_means: Vec<f64>,
    /// Bin estimates of the shot model and the pooled count of every single shot.
    pub estimates: Vec<f64>,
    pub shot_counts: Vec<u64>,
    /// `V1 / (copies * M)`.
    pub expected_variance: f64,
}

/// Runs `n_trials` trials of `runs` shots each; trial `i` uses its own stream.
pub fn run_trial_ensemble(
    state: &ThetaState,
    axis: &SpinAxis,
    runs: usize,
    n_trials: usize,
    mode: Mode,
    seed: RootSeed,
) -> Result<TrialEnsemble> {
    if runs == 0 || n_trials == 0 {
        return invalid(format!("runs and trials must be positive, got {runs}, {n_trials}"));
    }
    let model = ShotModel::new(state, axis, mode)?;
    let per_trial: Vec<Vec<u64>> = (0..n_trials)
        .into_par_iter()
        .map(|i| model.sample_counts(runs, &mut seed.substream(TAG_TRIALS, i as u64)))
        .collect();
    let mut shot_counts = vec![0u64; model.estimates.len()];
    let mut trial_means = Vec::with_capacity(n_trials);
    for counts in &per_trial {
        for (t, c) in shot_counts.iter_mut().zip(counts) {
            *t += c;
        }
        trial_means.push(model.count_moments(counts).0);
    }
    let mean = trial_means.iter().sum::<f64>() / n_trials as f64;
    let variance = if n_trials > 1 {
        trial_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n_trials - 1) as f64
    } else {
        0.0
    };
    let v1 = single_copy_variance(&state.qubit(), axis);
    Ok(TrialEnsemble {
        stats: TrialStats {
            n_trials,
            runs_per_trial: runs,
            mean,
            variance_or_mse: variance,
            seed: seed.0,
        },
        trial_means,
        estimates: model.estimates.clone(),
        shot_counts,
        expected_variance: mode.shot_variance(v1) / runs as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Equal-width histogram on `[lo, hi]`; the last bin includes `hi`, values outside
/// are dropped.
pub fn histogram(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Vec<HistogramBin>> {
    if bins == 0 || !(lo < hi) {
        return invalid(format!("need bins >= 1 and lo < hi, got {bins}, [{lo}, {hi}]"));
    }
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: lo + i as f64 * width,
            hi: if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &v in values {
        if !(lo..=hi).contains(&v) {
            continue;
        }
        let i = (((v - lo) / width) as usize).min(bins - 1);
        out[i].count += 1;
    }
    Ok(out)
}

/// Per-bin counts of `shots` single shots of `model`, drawn in fixed chunks from
/// streams `(series, chunk)` of `seed`.
pub fn shot_counts(model: &ShotModel, shots: usize, seed: RootSeed, series: u32) -> Vec<u64> {
    let chunks = shots.div_ceil(SHOT_CHUNK);
    let per_chunk: Vec<Vec<u64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = SHOT_CHUNK.min(shots - c * SHOT_CHUNK);
            let mut rng = seed.substream(TAG_SHOTS, (u64::from(series) << 32) | c as u64);
            model.sample_counts(n, &mut rng)
        })
        .collect();
    let mut total = vec![0u64; model.estimates.len()];
    for counts in &per_chunk {
        for (a, b) in total.iter_mut().zip(counts) {
            *a += b;
        }
    }
    total
}

/// One row of a sampled variance sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub theta: f64,
    pub samples: usize,
    pub analytic_mean: f64,
    pub sampled_mean: f64,
    /// 4 sigma of the sample mean.
    pub mean_band: f64,
    pub analytic_variance: f64,
    pub sampled_variance: f64,
    /// 4 sigma of the unbiased sample variance.
    pub variance_band: f64,
}

impl SweepPoint {
    pub fn passes(&self) -> bool {
        (self.sampled_mean - self.analytic_mean).abs() <= self.mean_band
            && (self.sampled_variance - self.analytic_variance).abs() <= self.variance_band
    }
}

/// Samples `samples` single shots per theta from `model(state)` and compares the
/// sample mean and variance against the model's analytic moments.
pub fn variance_sweep<F>(thetas: &[f64], phase: f64, samples: usize, seed: RootSeed, model: F) -> Result<Vec<SweepPoint>>
where
    F: Fn(&ThetaState) -> Result<ShotModel> + Sync,
{
    if samples == 0 {
        return invalid("samples must be positive");
    }
    let models = thetas
        .iter()
        .map(|&t| model(&ThetaState::new(t, phase)?))
        .collect::<Result<Vec<_>>>()?;
    let counts: Vec<Vec<u64>> = models
        .iter()
        .enumerate()
        .map(|(t, m)| shot_counts(m, samples, seed, t as u32))
        .collect();
    let n = samples as f64;
    let mut out = Vec::with_capacity(thetas.len());
    for (t, m) in models.iter().enumerate() {
        let (sampled_mean, sampled_variance) = m.count_moments(&counts[t]);
        let var = m.variance();
        // Var(s^2) = mu4/n - sigma^4 (n - 3)/(n (n - 1))
        let var_of_var = if samples > 1 {
            (m.central_moment(4) / n - var * var * (n - 3.0) / (n * (n - 1.0))).max(0.0)
        } else {
            0.0
        };
        out.push(SweepPoint {
            theta: thetas[t],
            samples,
            analytic_mean: m.mean(),
            sampled_mean,
            mean_band: 4.0 * (var / n).sqrt(),
            analytic_variance: var,
            sampled_variance,
            variance_band: 4.0 * var_of_var.sqrt(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn state(deg: f64) -> ThetaState {
        ThetaState::new(deg.to_radians(), 0.0).unwrap()
    }

    #[test]
    fn shot_models_have_expected_variance() {
        for deg in [0.0, 7.0, 13.5, 22.5, 31.0] {
            let s = state(deg);
            for axis in [SpinAxis::X, SpinAxis::Y, SpinAxis::Z] {
                let v1 = single_copy_variance(&s.qubit(), &axis);
                for mode in [Mode::Compressed, Mode::Direct3, Mode::Direct2] {
                    let m = ShotModel::new(&s, &axis, mode).unwrap();
                    assert_abs_diff_eq!(m.probabilities().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                    assert_abs_diff_eq!(m.variance(), mode.shot_variance(v1), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sweep_examples() {
        let seed = RootSeed(5);
        let x = variance_sweep(&[22.5f64.to_radians()], 0.0, 1000, seed, |s| {
            ShotModel::new(s, &SpinAxis::X, Mode::Compressed)
        })
        .unwrap();
        assert!(x[0].analytic_variance < 1e-15);
        let z = variance_sweep(&[0.0], 0.0, 1000, seed, |s| ShotModel::new(s, &SpinAxis::Z, Mode::Compressed)).unwrap();
        assert_eq!(z[0].sampled_variance, 0.0);
        let y = variance_sweep(&[0.1, 0.4], 0.0, 1000, seed, |s| ShotModel::new(s, &SpinAxis::Y, Mode::Compressed))
            .unwrap();
        for p in &y {
            assert_abs_diff_eq!(p.analytic_variance, 1.0 / 12.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn sweep_is_reproducible() {
        let run = || {
            variance_sweep(&[0.2, 0.3], 0.0, 70_000, RootSeed(9), |s| {
                ShotModel::new(s, &SpinAxis::Z, Mode::Direct2)
            })
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert!(a.iter().all(SweepPoint::passes));
    }

    #[test]
    fn trial_ensemble_basics() {
        let e = run_trial_ensemble(&state(13.5), &SpinAxis::Z, 20, 50, Mode::Compressed, RootSeed(1)).unwrap();
        assert_eq!(e.trial_means.len(), 50);
        assert_eq!(e.shot_counts.iter().sum::<u64>(), 1000);
        assert!(e.stats.variance_or_mse >= 0.0);
        assert!(run_trial_ensemble(&state(1.0), &SpinAxis::Z, 0, 5, Mode::Direct2, RootSeed(1)).is_err());
    }

    #[test]
    fn histogram_edges() {
        let h = histogram(&[0.0, 0.5, 1.0, 2.0, -0.1], 2, 0.0, 1.0).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 2]);
        assert!(histogram(&[], 0, 0.0, 1.0).is_err());
    }
}
