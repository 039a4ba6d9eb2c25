//! The `schurpress` command line.
//!
//! Every subcommand writes one data table (`--out`, default `schurpress-<command>.<ext>`)
//! and prints a one-line summary. With `--check` it also writes a verification report
//! next to the data file (`<stem>.check.<ext>`) and exits 1 if any row fails.
//!
//! Exit codes: 0 success, 1 failed check row or I/O error, 2 invalid arguments.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::collective::{estimate_moments, outcome_distribution, single_copy_variance, spin32_basis_map, SpinAxis};
use crate::error::{invalid, Error, Result};
use crate::estimation::{
    average_variance, axis_variances, chi_squared_band, mle_mse_sweep, run_trial_ensemble, shot_counts,
    sphere_average, sphere_average_variance, variance_sweep, Mode, ShotModel, ThetaState,
};
use crate::qstate::{make_product_state, StateVector};
use crate::report::{emit_report, emit_table, Format, ReportRow, Table, REPORT_HEADERS};
use crate::rng::{haar_direction, RootSeed};
use crate::schur::{build_qswt3_full, compress3, feedforward_branch};

/// Seed used by `--check` runs that do not pass `--seed`.
pub const DEFAULT_CHECK_SEED: u64 = 20_240_917;

/// Quadrature nodes in `cos(polar)` for the sphere averages.
const QUADRATURE_NODES: usize = 8;

const MAX_THETA_POINTS: usize = 100_000;

pub const COMPRESS_HEADERS: [&str; 7] =
    ["theta_deg", "phase_deg", "basis", "twice_m", "amplitude_re", "amplitude_im", "probability"];
pub const DISTRIBUTION_HEADERS: [&str; 9] =
    ["theta_deg", "phase_deg", "axis", "basis", "twice_m", "estimate", "probability", "frequency", "band"];
pub const TRIALS_HEADERS: [&str; 6] = ["theta_deg", "phase_deg", "axis", "mode", "trial", "trial_mean"];
pub const SWEEP_HEADERS: [&str; 9] = [
    "theta_deg",
    "v1",
    "analytic_compressed",
    "sampled_compressed",
    "band_compressed",
    "analytic_two_qubit",
    "sampled_two_qubit",
    "band_two_qubit",
    "ratio_to_two_qubit",
];
pub const AVERAGE_HEADERS: [&str; 9] = [
    "state",
    "theta_deg",
    "phase_deg",
    "vx",
    "vy",
    "vz",
    "axis_average",
    "quadrature_average",
    "compressed_average",
];
pub const MLE_HEADERS: [&str; 8] = ["theta_deg", "z_true", "v1", "mse", "v1_over_3", "v1_over_2", "games", "k_fit"];
pub const NOISE_HEADERS: [&str; 6] =
    ["theta_deg", "ideal_variance", "leaky_variance", "sampled_leaky_variance", "band", "deviation"];

const COMPRESS_HELP: &str = "Output columns: theta_deg,phase_deg,basis,twice_m,amplitude_re,amplitude_im,probability
Check report columns: experiment,parameters,analytic,sampled,band_lo,band_hi,pass";
const DISTRIBUTION_HELP: &str =
    "Output columns: theta_deg,phase_deg,axis,basis,twice_m,estimate,probability,frequency,band
Check report columns: experiment,parameters,analytic,sampled,band_lo,band_hi,pass";
const TRIALS_HELP: &str = "Output columns: theta_deg,phase_deg,axis,mode,trial,trial_mean
Check report columns: experiment,parameters,analytic,sampled,band_lo,band_hi,pass";
const SWEEP_HELP: &str = "Output columns: theta_deg,v1,analytic_compressed,sampled_compressed,band_compressed,analytic_two_qubit,sampled_two_qubit,band_two_qubit,ratio_to_two_qubit
Check report columns: experiment,parameters,analytic,sampled,band_lo,band_hi,pass";
const AVERAGE_HELP: &str = "Output columns: state,theta_deg,phase_deg,vx,vy,vz,axis_average,quadrature_average,compressed_average
Check report columns: experiment,parameters,analytic,sampled,band_lo,band_hi,pass";
const MLE_HELP: &str = "Output columns: theta_deg,z_true,v1,mse,v1_over_3,v1_over_2,games,k_fit
Check report columns: experiment,parameters,analytic,sampled,band_lo,band_hi,pass";
const NOISE_HELP: &str =
    "Output columns: theta_deg,ideal_variance,leaky_variance,sampled_leaky_variance,band,deviation
Check report columns: experiment,parameters,analytic,sampled,band_lo,band_hi,pass";

/// Process-level settings that do not come from flags.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CliEnv {
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl CliEnv {
    /// Reads `SCHURPRESS_THREADS` (unset or empty means 0).
    pub fn from_env() -> Result<Self> {
        match std::env::var("SCHURPRESS_THREADS") {
            Ok(v) if !v.trim().is_empty() => v
                .trim()
                .parse()
                .map(|threads| Self { threads })
                .map_err(|_| Error::InvalidArgument(format!("SCHURPRESS_THREADS must be a count, got {v:?}"))),
            _ => Ok(Self::default()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "schurpress",
    version,
    about = "Schur-Weyl compression of identical qubits: circuits, collective measurements and estimation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compressed pair amplitudes of psi^(x)3.
    #[command(after_help = COMPRESS_HELP)]
    Compress(CompressArgs),
    /// Single-shot outcome distribution of a collective measurement.
    #[command(after_help = DISTRIBUTION_HELP)]
    Distribution(DistributionArgs),
    /// Trial means of M-shot estimates.
    #[command(after_help = TRIALS_HELP)]
    Trials(TrialsArgs),
    /// Single-shot variance against theta, compressed and two-qubit.
    #[command(after_help = SWEEP_HELP)]
    Sweep(SweepArgs),
    /// Axis-averaged variance and its sphere quadrature.
    #[command(after_help = AVERAGE_HELP)]
    Average(AverageArgs),
    /// Mean squared error of the 2+1 maximum-likelihood baseline.
    #[command(after_help = MLE_HELP)]
    Mle(MleArgs),
    /// Compressed X variance with dark-port leakage.
    #[command(after_help = NOISE_HELP)]
    Noise(NoiseArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Root seed; without it a --check run uses a fixed seed and other runs draw one.
    #[arg(long)]
    seed: Option<u64>,
    /// Data file (default schurpress-<command>.<ext>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Also write <stem>.check.<ext> and exit 1 if any row fails.
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug)]
struct StateArgs {
    /// Degrees: a value, a list "a,b", or an inclusive range "start:stop:step".
    #[arg(long, value_name = "LIST", value_parser = parse_theta_list)]
    theta_deg: Option<ThetaList>,
    /// Relative phase in degrees.
    #[arg(long, default_value_t = 0.0, value_parser = parse_finite, allow_negative_numbers = true)]
    phase_deg: f64,
}

#[derive(Args, Debug)]
struct AxisArgs {
    #[arg(long, value_enum, ignore_case = true, conflicts_with_all = ["delta", "epsilon"])]
    axis: Option<AxisName>,
    /// Polar angle of the axis in degrees.
    #[arg(long, value_parser = parse_finite, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Azimuth of the axis in degrees.
    #[arg(long, value_parser = parse_finite, allow_negative_numbers = true)]
    epsilon: Option<f64>,
}

#[derive(Args, Debug)]
struct CompressArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct DistributionArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    axis: AxisArgs,
    /// Shots per theta.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Dark-port leakage probability (X axis only).
    #[arg(long, value_parser = parse_probability)]
    leakage_p: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct TrialsArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    axis: AxisArgs,
    /// Shots per trial.
    #[arg(short = 'M', long = "runs", default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 250, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Compressed)]
    mode: ModeArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    axis: AxisArgs,
    /// Shots per theta and scheme.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct AverageArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Additional Haar-random states.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct MleArgs {
    /// Degrees; the state phase is always zero.
    #[arg(long, value_name = "LIST", value_parser = parse_theta_list)]
    theta_deg: Option<ThetaList>,
    /// Games per theta.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[arg(long, value_name = "LIST", value_parser = parse_theta_list)]
    theta_deg: Option<ThetaList>,
    #[arg(long, default_value_t = 0.015, value_parser = parse_probability)]
    leakage_p: f64,
    /// Shots per theta.
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AxisName {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Compressed,
    Direct3,
    Direct2,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Compressed => Mode::Compressed,
            ModeArg::Direct3 => Mode::Direct3,
            ModeArg::Direct2 => Mode::Direct2,
        }
    }
}

/// Theta values in degrees, in the order given.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaList(pub Vec<f64>);

fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got {s:?}")),
    }
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    let p = parse_finite(s)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("probability must lie in [0, 1], got {p}"));
    }
    Ok(p)
}

/// Parses `a`, `a,b,...` or `start:stop:step` (items may be mixed). Ranges include
/// `stop` when it is hit within `1e-9`.
pub fn parse_theta_list(s: &str) -> std::result::Result<ThetaList, String> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [v] => out.push(parse_finite(v)?),
            [start, stop, step] => {
                let (start, stop, step) = (parse_finite(start)?, parse_finite(stop)?, parse_finite(step)?);
                if step <= 0.0 || stop < start {
                    return Err(format!("range {item:?} needs step > 0 and stop >= start"));
                }
                let n = ((stop - start) / step + 1e-9).floor();
                if n as usize >= MAX_THETA_POINTS {
                    return Err(format!("range {item:?} has too many points"));
                }
                let n = n as usize;
                for i in 0..=n {
                    let v = start + i as f64 * step;
                    out.push(if (v - stop).abs() <= 1e-9 { stop } else { v });
                }
            }
            _ => return Err(format!("cannot parse theta item {item:?}")),
        }
        if out.len() > MAX_THETA_POINTS {
            return Err("too many theta values".into());
        }
    }
    Ok(ThetaList(out))
}

fn thetas_or(list: &Option<ThetaList>, default: &str) -> Vec<f64> {
    match list {
        Some(l) => l.0.clone(),
        None => parse_theta_list(default).expect("valid default").0,
    }
}

fn resolve_axis(a: &AxisArgs) -> Result<(SpinAxis, String)> {
    if a.delta.is_some() || a.epsilon.is_some() {
        let (d, e) = (a.delta.unwrap_or(0.0), a.epsilon.unwrap_or(0.0));
        return Ok((SpinAxis::new(d.to_radians(), e.to_radians())?, format!("delta={d};epsilon={e}")));
    }
    Ok(match a.axis.unwrap_or(AxisName::Z) {
        AxisName::X => (SpinAxis::X, "X".into()),
        AxisName::Y => (SpinAxis::Y, "Y".into()),
        AxisName::Z => (SpinAxis::Z, "Z".into()),
    })
}

fn resolve_seed(o: &OutputArgs) -> u64 {
    match o.seed {
        Some(s) => s,
        None if o.check => DEFAULT_CHECK_SEED,
        None => rand::rng().random(),
    }
}

/// What a subcommand produced, before anything is written.
struct Outcome {
    table: Table,
    checks: Vec<ReportRow>,
    summary: String,
    default_format: Format,
}

/// Runs the CLI with `args` (including the program name), printing to the process
/// streams. Returns the exit code.
pub fn run_cli<I, T>(args: I, env: &CliEnv) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_with(args, env, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T>(args: I, env: &CliEnv, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(env.threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(line) => {
            let code = if line.1 { 0 } else { 1 };
            let _ = writeln!(out, "{}", line.0);
            code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidArgument(_) => 2,
                _ => 1,
            }
        }
    }
}

/// Runs one subcommand and writes its files. Returns the summary and whether all
/// checks passed.
fn execute(cmd: &Command) -> Result<(String, bool)> {
    let (name, output, outcome) = match cmd {
        Command::Compress(a) => ("compress", &a.output, compress(a)?),
        Command::Distribution(a) => ("distribution", &a.output, distribution(a)?),
        Command::Trials(a) => ("trials", &a.output, trials(a)?),
        Command::Sweep(a) => ("sweep", &a.output, sweep(a)?),
        Command::Average(a) => ("average", &a.output, average(a)?),
        Command::Mle(a) => ("mle", &a.output, mle(a)?),
        Command::Noise(a) => ("noise", &a.output, noise(a)?),
    };
    let format = match output.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => outcome.default_format,
    };
    let path = output
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("schurpress-{name}.{}", format.extension())));
    emit_table(&outcome.table, format, &path)?;
    let mut line = format!("{name}: {}; wrote {}", outcome.summary, path.display());
    let mut ok = true;
    if output.check {
        let report = check_path(&path, format);
        emit_report(&outcome.checks, format, &report)?;
        let passed = outcome.checks.iter().filter(|r| r.pass).count();
        ok = passed == outcome.checks.len();
        line.push_str(&format!(
            "; check {}: {passed}/{} rows passed, report {}",
            if ok { "PASS" } else { "FAIL" },
            outcome.checks.len(),
            report.display()
        ));
    }
    Ok((line, ok))
}

/// `dir/stem.check.ext` next to the data file.
fn check_path(path: &Path, format: Format) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.check.{}", format.extension()))
}

fn state_at(theta_deg: f64, phase_deg: f64) -> Result<ThetaState> {
    ThetaState::new(theta_deg.to_radians(), phase_deg.to_radians())
}

fn basis_label(index: usize) -> String {
    format!("{:02b}", index)
}

fn compress(a: &CompressArgs) -> Result<Outcome> {
    let thetas = thetas_or(&a.state.theta_deg, "13.5");
    let phase = a.state.phase_deg;
    let mut table = Table::new(&COMPRESS_HEADERS);
    let mut checks = Vec::new();
    let circuit = build_qswt3_full();
    let mut worst: f64 = 1.0;
    for &t in &thetas {
        let psi = state_at(t, phase)?.qubit();
        let pair = compress3(&psi);
        for (i, amp) in pair.amplitudes().iter().enumerate() {
            let twice_m = spin32_basis_map()[i].1;
            table.push(vec![
                t.into(),
                phase.into(),
                basis_label(i).into(),
                i64::from(twice_m).into(),
                amp.re.into(),
                amp.im.into(),
                amp.norm_sqr().into(),
            ])?;
        }
        let params = format!("theta_deg={t} phase_deg={phase}");
        let full = circuit.run_forced(&make_product_state(&psi, 3)?, &[])?.state;
        let f = full.fidelity(&pair.tensor(&StateVector::basis(1, 0)?)?)?;
        worst = worst.min(f);
        checks.push(ReportRow::within("compress.full_circuit_fidelity", &params, 1.0, f, 1e-10));
        for outcome in 0..2u8 {
            let ff = feedforward_branch(&psi, outcome)?;
            let f = ff.compressed.fidelity(&pair)?;
            worst = worst.min(f);
            let p = format!("{params} outcome={outcome}");
            checks.push(ReportRow::within("compress.feedforward_fidelity", &p, 1.0, f, 1e-10));
            checks.push(ReportRow::within("compress.feedforward_probability", &p, 0.5, ff.probability, 1e-10));
        }
    }
    Ok(Outcome {
        table,
        checks,
        summary: format!("{} state(s), worst circuit fidelity {worst}", thetas.len()),
        default_format: Format::Json,
    })
}

fn distribution(a: &DistributionArgs) -> Result<Outcome> {
    let thetas = thetas_or(&a.state.theta_deg, "13.5");
    let phase = a.state.phase_deg;
    let (axis, axis_label) = resolve_axis(&a.axis)?;
    if a.leakage_p.is_some() && axis != SpinAxis::X {
        return invalid("--leakage-p applies to the X axis only");
    }
    let seed = resolve_seed(&a.output);
    let n = a.samples as usize;
    let mut table = Table::new(&DISTRIBUTION_HEADERS);
    let mut checks = Vec::new();
    for (ti, &t) in thetas.iter().enumerate() {
        let state = state_at(t, phase)?;
        let model = match a.leakage_p {
            Some(p) => ShotModel::leaky_x(&state, p)?,
            None => ShotModel::new(&state, &axis, Mode::Compressed)?,
        };
        let counts = shot_counts(&model, n, RootSeed(seed), ti as u32);
        let params = format!("theta_deg={t} phase_deg={phase} axis={axis_label}");
        for (i, (&p, &c)) in model.probabilities().iter().zip(&counts).enumerate() {
            let freq = c as f64 / n as f64;
            let band = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
            table.push(vec![
                t.into(),
                phase.into(),
                axis_label.as_str().into(),
                basis_label(i).into(),
                i64::from(spin32_basis_map()[i].1).into(),
                model.estimates()[i].into(),
                p.into(),
                freq.into(),
                band.into(),
            ])?;
            let row = format!("{params} basis={}", basis_label(i));
            checks.push(ReportRow::within("distribution.frequency", row, p, freq, band));
        }
        let total: f64 = model.probabilities().iter().sum();
        checks.push(ReportRow::within("distribution.normalization", &params, 1.0, total, 1e-12));
    }
    Ok(Outcome {
        table,
        checks,
        summary: format!("{} theta value(s), {n} shots each, axis {axis_label}, seed {seed}", thetas.len()),
        default_format: Format::Csv,
    })
}

fn trials(a: &TrialsArgs) -> Result<Outcome> {
    let thetas = thetas_or(&a.state.theta_deg, "13.5");
    let phase = a.state.phase_deg;
    let (axis, axis_label) = resolve_axis(&a.axis)?;
    let seed = resolve_seed(&a.output);
    let mode = Mode::from(a.mode);
    let (runs, n_trials) = (a.runs as usize, a.trials as usize);
    let mut table = Table::new(&TRIALS_HEADERS);
    let mut checks = Vec::new();
    let mut summary = Vec::new();
    for (ti, &t) in thetas.iter().enumerate() {
        let state = state_at(t, phase)?;
        let e = run_trial_ensemble(&state, &axis, runs, n_trials, mode, RootSeed(seed).child(ti as u64))?;
        for (i, m) in e.trial_means.iter().enumerate() {
            table.push(vec![
                t.into(),
                phase.into(),
                axis_label.as_str().into(),
                mode.name().into(),
                i.into(),
                (*m).into(),
            ])?;
        }
        let params = format!("theta_deg={t} phase_deg={phase} axis={axis_label} mode={} M={runs}", mode.name());
        let var = e.stats.variance_or_mse;
        summary.push(format!("theta {t}: variance {var:.4e} vs {:.4e}", e.expected_variance));
        let psi = state.qubit();
        let mean = crate::collective::spin_expectation(&psi, &axis);
        let mean_band = 4.0 * (e.expected_variance / n_trials as f64).sqrt();
        checks.push(ReportRow::within("trials.mean", &params, mean, e.stats.mean, mean_band));
        if n_trials < 2 {
            continue;
        }
        let dof = n_trials - 1;
        let (lo, hi) = chi_squared_band(e.expected_variance, dof, 0.99)?;
        let expected = e.expected_variance;
        checks.push(ReportRow::new("trials.variance_in_band", &params, expected, var, lo - expected, hi - expected));
        // the other width (two copies vs three) must be rejected
        let v1 = single_copy_variance(&psi, &axis);
        if v1 > 0.0 {
            let other_mode = if mode == Mode::Direct2 { Mode::Compressed } else { Mode::Direct2 };
            let other = other_mode.shot_variance(v1) / runs as f64;
            let (olo, ohi) = chi_squared_band(other, dof, 0.99)?;
            let row = if other > expected {
                ReportRow::new("trials.rejects_other_width", &params, olo, var, f64::NEG_INFINITY, 0.0)
            } else {
                ReportRow::new("trials.rejects_other_width", &params, ohi, var, 0.0, f64::INFINITY)
            };
            checks.push(row);
        }
    }
    Ok(Outcome {
        table,
        checks,
        summary: format!("{} trials of M={runs}, {}, seed {seed}", n_trials, summary.join(", ")),
        default_format: Format::Csv,
    })
}

fn sweep(a: &SweepArgs) -> Result<Outcome> {
    let thetas_deg = thetas_or(&a.state.theta_deg, "0:22.5:2.25");
    let phase = a.state.phase_deg;
    let (axis, axis_label) = resolve_axis(&a.axis)?;
    let seed = RootSeed(resolve_seed(&a.output));
    let n = a.samples as usize;
    let rad: Vec<f64> = thetas_deg.iter().map(|t| t.to_radians()).collect();
    let phase_rad = phase.to_radians();
    let comp = variance_sweep(&rad, phase_rad, n, seed.child(0), |s| ShotModel::new(s, &axis, Mode::Compressed))?;
    let two = variance_sweep(&rad, phase_rad, n, seed.child(1), |s| ShotModel::new(s, &axis, Mode::Direct2))?;
    let mut table = Table::new(&SWEEP_HEADERS);
    let mut checks = Vec::new();
    let (mut sum_comp, mut sum_two) = (0.0, 0.0);
    for ((&t, c), w) in thetas_deg.iter().zip(&comp).zip(&two) {
        let v1 = single_copy_variance(&state_at(t, phase)?.qubit(), &axis);
        let ratio = w.sampled_variance / c.sampled_variance;
        table.push(vec![
            t.into(),
            v1.into(),
            c.analytic_variance.into(),
            c.sampled_variance.into(),
            c.variance_band.into(),
            w.analytic_variance.into(),
            w.sampled_variance.into(),
            w.variance_band.into(),
            ratio.into(),
        ])?;
        sum_comp += c.sampled_variance;
        sum_two += w.sampled_variance;
        let params = format!("theta_deg={t} phase_deg={phase} axis={axis_label}");
        checks.push(ReportRow::within("sweep.analytic_law", &params, v1 / 3.0, c.analytic_variance, 1e-12));
        checks.push(ReportRow::within("sweep.compressed_mean", &params, c.analytic_mean, c.sampled_mean, c.mean_band));
        checks.push(ReportRow::within(
            "sweep.compressed_variance",
            &params,
            c.analytic_variance,
            c.sampled_variance,
            c.variance_band,
        ));
        checks.push(ReportRow::within(
            "sweep.two_qubit_variance",
            &params,
            w.analytic_variance,
            w.sampled_variance,
            w.variance_band,
        ));
    }
    if sum_comp > 0.0 {
        checks.push(ReportRow::within(
            "sweep.pooled_ratio_to_two_qubit",
            format!("axis={axis_label}"),
            1.5,
            sum_two / sum_comp,
            0.03,
        ));
    }
    Ok(Outcome {
        table,
        checks,
        summary: format!(
            "{} theta value(s), {n} shots per scheme, axis {axis_label}, pooled two-qubit/compressed ratio {:.4}, seed {}",
            thetas_deg.len(),
            sum_two / sum_comp,
            seed.0
        ),
        default_format: Format::Csv,
    })
}

fn average(a: &AverageArgs) -> Result<Outcome> {
    let thetas = thetas_or(&a.state.theta_deg, "0:45:5.625");
    let seed = resolve_seed(&a.output);
    let mut states: Vec<(String, f64, f64)> = thetas.iter().map(|&t| ("grid".to_string(), t, a.state.phase_deg)).collect();
    let mut rng = RootSeed(seed).stream(0);
    for i in 0..a.samples {
        // cos(polar/2)|0> + e^{i az} sin(polar/2)|1> is theta = polar/4, phase = az
        let (polar, az) = haar_direction(&mut rng);
        states.push((format!("haar-{i}"), (polar / 4.0).to_degrees(), az.to_degrees()));
    }
    let mut table = Table::new(&AVERAGE_HEADERS);
    let mut checks = Vec::new();
    let mut worst: f64 = 0.0;
    for (label, t, phase) in &states {
        let psi = state_at(*t, *phase)?.qubit();
        let v = axis_variances(&psi);
        let avg = average_variance(&psi);
        let quad = sphere_average_variance(&psi, QUADRATURE_NODES)?;
        let pair = compress3(&psi);
        let comp = sphere_average(QUADRATURE_NODES, |axis| Ok(estimate_moments(&outcome_distribution(&pair, axis)?).1))?;
        table.push(vec![
            label.as_str().into(),
            (*t).into(),
            (*phase).into(),
            v[0].into(),
            v[1].into(),
            v[2].into(),
            avg.into(),
            quad.into(),
            comp.into(),
        ])?;
        worst = worst.max((quad - avg).abs());
        let params = format!("state={label} theta_deg={t} phase_deg={phase}");
        checks.push(ReportRow::within("average.quadrature_identity", &params, avg, quad, 1e-8));
        checks.push(ReportRow::within("average.trace_identity", &params, 1.0 / 6.0, avg, 1e-12));
        checks.push(ReportRow::within("average.compressed_quadrature", &params, avg / 3.0, comp, 1e-8));
    }
    Ok(Outcome {
        table,
        checks,
        summary: format!("{} state(s), max |quadrature - axis average| {worst:.3e}, seed {seed}", states.len()),
        default_format: Format::Csv,
    })
}

fn mle(a: &MleArgs) -> Result<Outcome> {
    let thetas = thetas_or(&a.theta_deg, "0:45:5.625");
    let seed = resolve_seed(&a.output);
    let rad: Vec<f64> = thetas.iter().map(|t| t.to_radians()).collect();
    let sweep = mle_mse_sweep(&rad, a.samples as usize, RootSeed(seed))?;
    let k = sweep.k_fit.unwrap_or(f64::NAN);
    let mut table = Table::new(&MLE_HEADERS);
    let mut checks = Vec::new();
    for (&t, p) in thetas.iter().zip(&sweep.points) {
        table.push(vec![
            t.into(),
            p.z_true.into(),
            p.v1.into(),
            p.mse.into(),
            (p.v1 / 3.0).into(),
            (p.v1 / 2.0).into(),
            p.games.into(),
            k.into(),
        ])?;
        if p.v1 < 1e-15 {
            checks.push(ReportRow::new(
                "mle.mse_positive_at_eigenstate",
                format!("theta_deg={t}"),
                0.0,
                p.mse,
                f64::MIN_POSITIVE,
                f64::INFINITY,
            ));
        }
    }
    let count = sweep.points.len() as f64;
    let mean_mse = sweep.points.iter().map(|p| p.mse).sum::<f64>() / count;
    let mean_v1 = sweep.points.iter().map(|p| p.v1).sum::<f64>() / count;
    let (lo, hi) = (mean_v1 / 3.0, mean_v1 / 2.0);
    let grid = format!("thetas={}", thetas.len());
    checks.push(ReportRow::within(
        "mle.mean_mse_between_baselines",
        &grid,
        0.5 * (lo + hi),
        mean_mse,
        0.5 * (hi - lo),
    ));
    checks.push(ReportRow::within("mle.k_fit", &grid, 2.5, k, 0.5));
    Ok(Outcome {
        table,
        checks,
        summary: format!("{} theta value(s), {} games each, K = {k:.4}, seed {seed}", thetas.len(), a.samples),
        default_format: Format::Csv,
    })
}

fn noise(a: &NoiseArgs) -> Result<Outcome> {
    let thetas = thetas_or(&a.theta_deg, "0:22.5:2.25");
    let seed = resolve_seed(&a.output);
    let p = a.leakage_p;
    let rad: Vec<f64> = thetas.iter().map(|t| t.to_radians()).collect();
    let sampled = variance_sweep(&rad, 0.0, a.samples as usize, RootSeed(seed), |s| ShotModel::leaky_x(s, p))?;
    let mut table = Table::new(&NOISE_HEADERS);
    let mut checks = Vec::new();
    let mut deviations = Vec::with_capacity(thetas.len());
    for (&t, s) in thetas.iter().zip(&sampled) {
        let ideal = ShotModel::new(&state_at(t, 0.0)?, &SpinAxis::X, Mode::Compressed)?.variance();
        let leaky = s.analytic_variance;
        let deviation = leaky - ideal;
        deviations.push(deviation);
        table.push(vec![
            t.into(),
            ideal.into(),
            leaky.into(),
            s.sampled_variance.into(),
            s.variance_band.into(),
            deviation.into(),
        ])?;
        let params = format!("theta_deg={t} leakage_p={p}");
        checks.push(ReportRow::within("noise.sampled_variance", &params, leaky, s.sampled_variance, s.variance_band));
        if (t - 22.5).abs() <= 1e-9 {
            checks.push(ReportRow::within("noise.ideal_zero", &params, 0.0, ideal, 1e-12));
            checks.push(ReportRow::new(
                "noise.leaky_positive",
                &params,
                0.0,
                s.sampled_variance,
                f64::MIN_POSITIVE,
                f64::INFINITY,
            ));
        }
    }
    let peak = deviations
        .iter()
        .enumerate()
        .fold(0, |best, (i, d)| if d.abs() > deviations[best].abs() { i } else { best });
    let has_target = thetas.iter().any(|t| (t - 22.5).abs() <= 1e-9);
    let step = thetas
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    if has_target && step.is_finite() {
        checks.push(ReportRow::within(
            "noise.max_deviation_location",
            format!("leakage_p={p}"),
            22.5,
            thetas[peak],
            step + 1e-9,
        ));
    }
    Ok(Outcome {
        table,
        checks,
        summary: format!(
            "{} theta value(s), p = {p}, largest deviation at theta {} deg, seed {seed}",
            thetas.len(),
            thetas[peak]
        ),
        default_format: Format::Csv,
    })
}

/// Column lists per subcommand, as documented in `--help`.
pub fn headers_for(command: &str) -> Option<&'static [&'static str]> {
    Some(match command {
        "compress" => &COMPRESS_HEADERS,
        "distribution" => &DISTRIBUTION_HEADERS,
        "trials" => &TRIALS_HEADERS,
        "sweep" => &SWEEP_HEADERS,
        "average" => &AVERAGE_HEADERS,
        "mle" => &MLE_HEADERS,
        "noise" => &NOISE_HEADERS,
        "report" => &REPORT_HEADERS,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut full = vec!["schurpress"];
        full.extend_from_slice(args);
        let code = run_cli_with(full, &CliEnv { threads: 1 }, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn theta_lists() {
        assert_eq!(parse_theta_list("13.5").unwrap().0, vec![13.5]);
        assert_eq!(parse_theta_list("0,5,22.5").unwrap().0, vec![0.0, 5.0, 22.5]);
        let r = parse_theta_list("0:22.5:2.25").unwrap().0;
        assert_eq!(r.len(), 11);
        assert_eq!(*r.last().unwrap(), 22.5);
        assert_eq!(parse_theta_list("0:1:0.1").unwrap().0.len(), 11);
        assert_eq!(parse_theta_list("0:1:0.3").unwrap().0.len(), 4);
        for bad in ["", "a", "1:0:1", "0:1:0", "0:1", "nan", "1,,2"] {
            assert!(parse_theta_list(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn help_documents_headers() {
        for cmd in ["compress", "distribution", "trials", "sweep", "average", "mle", "noise"] {
            let (code, out, _) = run(&[cmd, "--help"]);
            assert_eq!(code, 0);
            assert!(out.contains(&headers_for(cmd).unwrap().join(",")), "{cmd}");
            assert!(out.contains(&REPORT_HEADERS.join(",")));
        }
    }

    #[test]
    fn validation_errors_exit_2() {
        for args in [
            vec!["compress", "--bogus"],
            vec!["compress", "--theta-deg", "x"],
            vec!["trials", "-M", "0"],
            vec!["noise", "--leakage-p", "1.5"],
            vec!["sweep", "--axis", "Z", "--delta", "10"],
            vec!["distribution", "--axis", "Z", "--leakage-p", "0.1"],
            vec!["frobnicate"],
        ] {
            let (code, _, err) = run(&args);
            assert_eq!(code, 2, "{args:?}");
            assert!(!err.is_empty());
        }
    }

    #[test]
    fn compress_writes_json_and_check() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("c.json");
        let (code, stdout, _) = run(&["compress", "--theta-deg", "13.5", "--out", out.to_str().unwrap(), "--check"]);
        assert_eq!(code, 0, "{stdout}");
        assert_eq!(stdout.lines().count(), 1);
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
        let probs: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["probability"].as_f64().unwrap()).collect();
        for (p, want) in probs.iter().zip([0.50036, 0.38971, 0.10117, 0.00876]) {
            assert!((p - want).abs() < 1e-5);
        }
        assert!(dir.path().join("c.check.json").exists());
    }

    #[test]
    fn unwritable_output_exits_1() {
        let (code, _, err) = run(&["compress", "--out", "/nonexistent-dir/x.json"]);
        assert_eq!(code, 1);
        assert!(err.contains("i/o"));
    }

    #[test]
    fn check_path_is_sibling() {
        assert_eq!(check_path(Path::new("a/b.csv"), Format::Csv), PathBuf::from("a/b.check.csv"));
        assert_eq!(check_path(Path::new("b"), Format::Json), PathBuf::from("b.check.json"));
    }
}
