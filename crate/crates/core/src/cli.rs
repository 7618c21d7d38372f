//! Command-line front end. Every subcommand prints one JSON report on
//! standard output. Exit codes: 0 success, 1 internal failure, 2 usage.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::json;

use crate::error::Error;
use crate::experiments::{
    chsh_report, double_slit, fringe_spacing, fringe_visibility, local_maxima, mach_zehnder,
    stern_gerlach, ChshSetting, SlitGeometry, SpinInput,
};
use crate::measurement::{
    detect, detect_shots, detection_probabilities, mark, simulate_device_runs_with, EnvEvolution,
    MeasurementBasis, MAX_ENV_QUBITS,
};
use crate::nosignal::{run_protocol, Mode, ProtocolConfig};
use crate::report::{emit_csv, RunReport};
use crate::rng::SeededRng;
use crate::state::{StateVector, SubsystemLayout, C64};
use crate::stats::{frequencies, sample_index};

#[derive(Debug, Parser)]
#[command(name = "qmeasure", version, about = "Two-step quantum measurement simulator")]
pub struct Cli {
    /// RNG seed; identical seeds give identical reports.
    #[arg(long, global = true, env = "QMEASURE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled shots (runs for device-runs).
    #[arg(long, global = true, default_value_t = 10_000)]
    pub shots: u64,
    /// Exact probabilities only, no sampling.
    #[arg(long, global = true)]
    pub exact: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mark-and-detect a single system in a chosen basis.
    Measure(MeasureArgs),
    /// Stern-Gerlach magnet with a spin input.
    Sg {
        #[arg(long, value_enum, default_value_t = SgInput::YPlus)]
        input: SgInput,
    },
    /// Mach-Zehnder interferometer.
    Mz {
        /// Insert the second beam splitter before the receivers.
        #[arg(long)]
        second_mirror: bool,
        /// Lower-arm phase shift in radians.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phase: f64,
    },
    /// Far-field two-slit intensity profile.
    DoubleSlit(SlitArgs),
    /// CHSH combination on the Bell pair Φ (default angles reach 2√2).
    Chsh(ChshArgs),
    /// Reduced-vs-mixed signalling protocol.
    Nosignal(NosignalArgs),
    /// Repeated measurements with a random environment per run.
    DeviceRuns(DeviceArgs),
    /// Run the invariant suite; exits 1 on the first failure.
    Verify,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SgInput {
    YPlus,
    ZPlus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisChoice {
    Z,
    X,
    Y,
    Computational,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Comma-separated real parts of the amplitudes.
    #[arg(long, value_delimiter = ',', default_values_t = [0.6, 0.8], allow_negative_numbers = true)]
    pub amps: Vec<f64>,
    /// Comma-separated imaginary parts (zeros when omitted).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub imag: Vec<f64>,
    #[arg(long, value_enum, default_value_t = BasisChoice::Z)]
    pub basis: BasisChoice,
}

#[derive(Debug, Args)]
pub struct SlitArgs {
    /// Slit separation d in metres.
    #[arg(long, default_value_t = 50e-6)]
    pub separation: f64,
    /// Slit width in metres.
    #[arg(long, default_value_t = 10e-6)]
    pub width: f64,
    /// Wavelength λ in metres.
    #[arg(long, default_value_t = 500e-9)]
    pub wavelength: f64,
    /// Screen distance L in metres.
    #[arg(long, default_value_t = 1.0)]
    pub distance: f64,
    #[arg(long, default_value_t = -0.05, allow_negative_numbers = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub x_max: f64,
    /// Grid points (at least 64).
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
    /// Relative slit amplitudes.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [1.0, 1.0])]
    pub weights: Vec<f64>,
    /// Which slits are open.
    #[arg(long, value_enum, default_value_t = OpenSlits::Both)]
    pub open: OpenSlits,
    /// Also write the profile as `x,density` CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OpenSlits {
    Both,
    First,
    Second,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2, allow_negative_numbers = true)]
    pub a_prime: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, default_value_t = 3.0 * std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
    pub b_prime: f64,
}

#[derive(Debug, Args)]
pub struct NosignalArgs {
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub pairs: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub groups: u64,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub pool: u64,
    /// Message bits such as `0110`; random from the seed when omitted.
    #[arg(long)]
    pub bits: Option<String>,
}

#[derive(Debug, Args)]
pub struct DeviceArgs {
    /// Environment qubits per run.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(0..=MAX_ENV_QUBITS as u64))]
    pub n_env: u64,
    /// Draw and apply full environment unitaries instead of a single column.
    #[arg(long)]
    pub full_unitary: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [std::f64::consts::FRAC_1_SQRT_2; 2], allow_negative_numbers = true)]
    pub amps: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub imag: Vec<f64>,
}

type CliResult<T> = std::result::Result<T, Failure>;

enum Failure {
    Usage(String),
    Internal(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Internal(e)
    }
}

/// Parses `args` (program name first), runs the command and writes the
/// JSON report to `out`. Returns the process exit code.
pub fn run<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
    W: Write,
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
                    let _ = e.print();
                    2
                }
            };
        }
    };
    let start = Instant::now();
    let result = match &cli.command {
        Command::Verify => {
            let report = crate::verify::run_all(cli.seed);
            let code = if report.passed { 0 } else { 1 };
            return match serde_json::to_string_pretty(&report) {
                Ok(s) => {
                    let _ = writeln!(out, "{s}");
                    if !report.passed {
                        eprintln!("verify: invariant breach");
                    }
                    code
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            };
        }
        _ => dispatch(&cli),
    };
    match result {
        Ok(mut report) => {
            report.wall_time_s = start.elapsed().as_secs_f64();
            if let Err(e) = report.check() {
                eprintln!("error: {e}");
                return 1;
            }
            match serde_json::to_string_pretty(&report) {
                Ok(s) => {
                    let _ = writeln!(out, "{s}");
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn shots(cli: &Cli) -> u64 {
    if cli.exact {
        0
    } else {
        cli.shots
    }
}

fn dispatch(cli: &Cli) -> CliResult<RunReport> {
    let mut rng = SeededRng::new(cli.seed);
    match &cli.command {
        Command::Measure(a) => run_measure(a, shots(cli), &mut rng),
        Command::Sg { input } => {
            let input = match input {
                SgInput::YPlus => SpinInput::YPlus,
                SgInput::ZPlus => SpinInput::ZPlus,
            };
            Ok(stern_gerlach(input, shots(cli), &mut rng)?)
        }
        Command::Mz { second_mirror, phase } => {
            if !phase.is_finite() {
                return Err(Failure::Usage("--phase must be finite".into()));
            }
            Ok(mach_zehnder(*second_mirror, *phase, shots(cli), &mut rng)?)
        }
        Command::DoubleSlit(a) => run_double_slit(a, shots(cli), &mut rng),
        Command::Chsh(a) => {
            let setting = ChshSetting { a: a.a, a_prime: a.a_prime, b: a.b, b_prime: a.b_prime };
            if ![a.a, a.a_prime, a.b, a.b_prime].iter().all(|x| x.is_finite()) {
                return Err(Failure::Usage("angles must be finite".into()));
            }
            Ok(chsh_report(&setting, shots(cli), &mut rng)?)
        }
        Command::Nosignal(a) => run_nosignal(a, cli, &mut rng),
        Command::DeviceRuns(a) => run_device(a, cli, &mut rng),
        Command::Verify => unreachable!("handled in run"),
    }
}

fn user_state(label: &str, re: &[f64], im: &[f64]) -> CliResult<StateVector> {
    if !im.is_empty() && im.len() != re.len() {
        return Err(Failure::Usage("--imag must have as many entries as --amps".into()));
    }
    if re.len() < 2 {
        return Err(Failure::Usage("need at least two amplitudes".into()));
    }
    let amps: Vec<C64> = re
        .iter()
        .enumerate()
        .map(|(i, &r)| C64::new(r, im.get(i).copied().unwrap_or(0.0)))
        .collect();
    let layout = SubsystemLayout::single(label, amps.len()).map_err(|e| Failure::Usage(e.to_string()))?;
    StateVector::from_slice(layout, &amps).map_err(|e| Failure::Usage(e.to_string()))
}

fn basis_for(choice: BasisChoice, dim: usize) -> CliResult<MeasurementBasis> {
    match (choice, dim) {
        (BasisChoice::Computational, d) => Ok(MeasurementBasis::computational(d)),
        (BasisChoice::Z, 2) => Ok(MeasurementBasis::z()),
        (BasisChoice::X, 2) => Ok(MeasurementBasis::spin_xz(std::f64::consts::FRAC_PI_2)),
        (BasisChoice::Y, 2) => Ok(MeasurementBasis::y()),
        (_, d) => Err(Failure::Usage(format!("spin bases need a qubit, got dimension {d}"))),
    }
}

fn run_measure(a: &MeasureArgs, shots: u64, rng: &mut SeededRng) -> CliResult<RunReport> {
    let psi = user_state("system", &a.amps, &a.imag)?;
    let basis = basis_for(a.basis, psi.dim())?;
    let ms = mark(&psi, &basis, basis.len())?;
    let probs = detection_probabilities(&ms)?;
    let mut report = RunReport::new(
        "measure",
        json!({ "amps": a.amps, "imag": a.imag, "basis": format!("{:?}", a.basis).to_lowercase(), "shots": shots }),
        rng.seed(),
    );
    report.outcome_labels = basis.labels().to_vec();
    report.exact_probabilities = Some(probs);
    report.diag("marked_state", ms.joint().to_pairs());
    report.diag("mismatch_amplitude", ms.mismatch_amplitude()?);
    if shots > 0 {
        let s = detect_shots(&ms, shots, rng)?;
        report.sampled_frequencies = Some(frequencies(&s.counts));
        report.counts = Some(s.counts);
        report.shots = shots;
        report.diag("min_fidelity", s.min_fidelity);
        let first = detect(&ms, rng)?;
        report.diag("example_outcome", &first.outcome_label);
        report.diag("example_post_system", first.post_system.to_pairs());
    }
    Ok(report)
}

fn run_double_slit(a: &SlitArgs, shots: u64, rng: &mut SeededRng) -> CliResult<RunReport> {
    let geom = SlitGeometry {
        slit_separation: a.separation,
        slit_width: a.width,
        wavelength: a.wavelength,
        screen_distance: a.distance,
        x_min: a.x_min,
        x_max: a.x_max,
        n_points: a.points,
        slit_weights: [a.weights[0], a.weights[1]],
    };
    geom.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let open = match a.open {
        OpenSlits::Both => [true, true],
        OpenSlits::First => [true, false],
        OpenSlits::Second => [false, true],
    };
    let profile = double_slit(&geom, open)?;
    if let Some(path) = &a.csv {
        emit_csv(&profile, path)?;
    }
    let mut report = RunReport::new(
        "double-slit",
        json!({ "geometry": geom, "open": open, "shots": shots, "csv": a.csv }),
        rng.seed(),
    );
    report.outcome_labels = profile.x.iter().map(|x| format!("{x:.9e}")).collect();
    report.exact_probabilities = Some(profile.bin_probabilities.clone());
    let expected = geom.fringe_period();
    report.diag("riemann_sum", profile.riemann_sum());
    report.diag("far_field", profile.far_field);
    report.diag("fresnel_number", geom.fresnel_number());
    report.diag("expected_fringe_spacing", expected);
    report.diag("fringe_spacing", fringe_spacing(&profile));
    report.diag("grid_step", profile.dx);
    report.diag("visibility", fringe_visibility(&profile, expected));
    report.diag("n_maxima", local_maxima(&profile.density).len());

    // Central bright fringe: the bins within a quarter period of x = 0.
    let central: Vec<usize> = (0..profile.x.len())
        .filter(|&i| profile.x[i].abs() <= expected / 4.0)
        .collect();
    let p_central: f64 = central.iter().map(|&i| profile.bin_probabilities[i]).sum();
    report.diag("central_fringe_exact", p_central);
    if shots > 0 {
        let mut counts = vec![0u64; profile.x.len()];
        for _ in 0..shots {
            counts[sample_index(&profile.bin_probabilities, rng)] += 1;
        }
        let hits: u64 = central.iter().map(|&i| counts[i]).sum();
        report.sampled_frequencies = Some(frequencies(&counts));
        report.counts = Some(counts);
        report.shots = shots;
        report.diag("central_fringe_sampled", hits as f64 / shots as f64);
    }
    Ok(report)
}

fn run_nosignal(a: &NosignalArgs, cli: &Cli, rng: &mut SeededRng) -> CliResult<RunReport> {
    let bits: Vec<u8> = match &a.bits {
        Some(s) => s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Failure::Usage(format!("--bits must contain only 0 and 1, got {ch:?}"))),
            })
            .collect::<std::result::Result<_, _>>()?,
        None => (0..a.groups).map(|_| rng.gen_range(0..=1u8)).collect(),
    };
    if bits.len() as u64 != a.groups {
        return Err(Failure::Usage(format!("--bits has {} bits for {} groups", bits.len(), a.groups)));
    }
    let cfg = ProtocolConfig {
        n_pairs_per_group: a.pairs as usize,
        n_groups: a.groups as usize,
        process_pool_size: a.pool as usize,
        seed: cli.seed,
        mode: if cli.exact { Mode::Exact } else { Mode::Sampled },
    };
    let res = run_protocol(&cfg, &bits)?;
    let mut report = RunReport::new("nosignal", json!(cfg), cli.seed);
    report.outcome_labels = vec!["0".into(), "1".into()];
    let decoded = res.decoded_bits.iter().filter(|&&b| b == 1).count() as u64;
    report.counts = Some(vec![res.decoded_bits.len() as u64 - decoded, decoded]);
    report.sampled_frequencies = Some(frequencies(report.counts.as_ref().unwrap()));
    report.shots = (cfg.n_pairs_per_group * cfg.n_groups) as u64;
    let sigma = (0.25 / cfg.n_groups as f64).sqrt();
    report.diag("accuracy", res.accuracy);
    report.diag("chance_sigma", sigma);
    report.diag("within_3_sigma_of_chance", (res.accuracy - 0.5).abs() <= 3.0 * sigma);
    report.diag("max_trace_distance", res.max_trace_distance);
    report.diag("max_exact_separation", res.max_exact_separation);
    report.diag("max_empirical_separation", res.max_empirical_separation);
    report.diag("sent_bits", &res.sent_bits);
    report.diag("decoded_bits", &res.decoded_bits);
    report.diag("processes", &res.processes);
    Ok(report)
}

fn run_device(a: &DeviceArgs, cli: &Cli, rng: &mut SeededRng) -> CliResult<RunReport> {
    let psi = user_state("system", &a.amps, &a.imag)?;
    let basis = MeasurementBasis::computational(psi.dim());
    let evolution = if a.full_unitary { EnvEvolution::FullUnitary } else { EnvEvolution::HaarColumn };
    if cli.shots == 0 {
        return Err(Failure::Usage("device-runs needs --shots ≥ 1 (number of runs)".into()));
    }
    let res = simulate_device_runs_with(&psi, &basis, a.n_env as usize, cli.shots, evolution, rng)?;
    let mut report = RunReport::new(
        "device-runs",
        json!({ "n_env": a.n_env, "runs": cli.shots, "evolution": evolution, "amps": a.amps, "imag": a.imag }),
        cli.seed,
    );
    report.outcome_labels = res.outcome_labels.clone();
    report.exact_probabilities = Some(res.probabilities.clone());
    report.sampled_frequencies = Some(res.frequencies.clone());
    report.counts = Some(res.counts.clone());
    report.shots = res.n_runs;
    report.diag("mean_coherence", res.mean_coherence);
    report.diag("coherence_std_error", res.coherence_std_error);
    report.diag("outcomes", &res.outcomes);
    Ok(report)
}
