//! Command-line front end for `ccd-core`: run configuration, dataset output
//! and the `ccd-sim` subcommands.
//!
//! Precedence of settings, lowest first: built-in defaults, the `--config`
//! file, then command-line flags in the order given (`--set key=value`
//! applies any config key). The worker count comes from `--threads`, else the
//! `threads` key, else `CCD_SIM_THREADS`, else the available parallelism.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod selftest;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{emit_config, parse_config, ConfigError, Format, Grid, RunConfig};
pub use dataset::{content_hash, fmt_f64, write_atomic, Column, Dataset, DatasetError};
pub use error::{CliError, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL};

pub const THREADS_ENV: &str = "CCD_SIM_THREADS";

#[derive(Parser, Debug)]
#[command(name = "ccd-sim", version, about = "Simulator for continuously driven dressed qubits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every simulation subcommand.
#[derive(Args, Debug, Default)]
pub struct Common {
    /// Config file (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// bare, am, pm or cm
    #[arg(long)]
    pub scheme: Option<String>,
    /// Amplitude-modulation share; give with --alpha-p instead of --scheme.
    #[arg(long = "alpha-a")]
    pub alpha_a: Option<String>,
    #[arg(long = "alpha-p")]
    pub alpha_p: Option<String>,
    /// Rabi frequency Ω₀/2π.
    #[arg(long)]
    pub rabi_hz: Option<String>,
    /// Carrier frequency.
    #[arg(long)]
    pub mw_hz: Option<String>,
    /// Static detuning δ/2π.
    #[arg(long)]
    pub detuning_hz: Option<String>,
    /// Static Rabi error as a fraction of the Rabi frequency.
    #[arg(long)]
    pub rabi_error_frac: Option<String>,
    /// Modulation strength as a fraction of the Rabi frequency.
    #[arg(long)]
    pub mod_ratio: Option<String>,
    /// Modulation phase θ_m in radians (`pi/2` forms accepted).
    #[arg(long)]
    pub mod_phase: Option<String>,
    /// Carrier phase φ_mw in radians.
    #[arg(long)]
    pub mw_phase: Option<String>,
    /// Standard deviation of the per-shot static detuning.
    #[arg(long)]
    pub noise_sigma_detuning_hz: Option<String>,
    /// Standard deviation of the per-shot Rabi error, as a fraction of Ω₀.
    #[arg(long)]
    pub noise_sigma_rabi_frac: Option<String>,
    /// Noise shots averaged per grid point.
    #[arg(long)]
    pub noise_samples: Option<String>,
    /// Seed for noise draws and RB sequences.
    #[arg(long)]
    pub seed: Option<String>,
    /// Worker threads; 0 uses every core. Falls back to CCD_SIM_THREADS.
    #[arg(long)]
    pub threads: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, short = 'o')]
    pub out: Option<String>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// cf4 or midpoint
    #[arg(long)]
    pub integrator: Option<String>,
    /// Integrator steps per period of the fastest frequency in the frame.
    #[arg(long)]
    pub steps_per_period: Option<String>,
    /// auto, first or second
    #[arg(long)]
    pub readout_frame: Option<String>,
    /// Any config key, e.g. `--set duration_stop=2e-6`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Add a wall-clock timestamp to the dataset header (breaks byte identity).
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Args, Debug, Default)]
pub struct DurationFlags {
    /// Number of drive durations.
    #[arg(long = "durations")]
    pub durations: Option<usize>,
    /// Longest drive duration in seconds.
    #[arg(long)]
    pub duration_max: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct DetuningFlags {
    /// Full width of the detuning grid, centred on zero.
    #[arg(long)]
    pub detuning_span_hz: Option<f64>,
    /// Number of detuning values.
    #[arg(long)]
    pub detuning_count: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct ErrorFlags {
    /// Full width of the Rabi-error grid (fraction of the Rabi frequency), centred on zero.
    #[arg(long)]
    pub error_span: Option<f64>,
    /// Number of Rabi-error values.
    #[arg(long)]
    pub error_count: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Spin-up fraction over detuning × duration.
    #[command(allow_negative_numbers = true)]
    Chevron {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        detuning: DetuningFlags,
        #[command(flatten)]
        duration: DurationFlags,
    },
    /// Spin-up fraction over static Rabi error × duration at zero detuning.
    #[command(allow_negative_numbers = true)]
    RabiError {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        error: ErrorFlags,
        #[command(flatten)]
        duration: DurationFlags,
    },
    /// Y_π infidelity over a detuning or Rabi-error grid.
    #[command(allow_negative_numbers = true)]
    Infidelity {
        #[command(flatten)]
        common: Common,
        /// detuning or rabi
        #[arg(long)]
        axis: Option<String>,
        #[command(flatten)]
        detuning: DetuningFlags,
        #[command(flatten)]
        error: ErrorFlags,
    },
    /// Bloch trajectory with markers at every π/2 of nominal rotation.
    #[command(allow_negative_numbers = true)]
    Trajectory {
        #[command(flatten)]
        common: Common,
        /// Nominal rotation to follow, a multiple of π/2 (e.g. `20pi`).
        #[arg(long)]
        total_angle: Option<String>,
        /// Samples per π/2 of nominal rotation.
        #[arg(long)]
        samples_per_pi2: Option<String>,
    },
    /// Fourier spectra of a chevron or Rabi-error sweep over duration.
    #[command(allow_negative_numbers = true)]
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// chevron or rabi-error
        #[arg(long)]
        source: Option<String>,
        #[command(flatten)]
        detuning: DetuningFlags,
        #[command(flatten)]
        error: ErrorFlags,
        #[command(flatten)]
        duration: DurationFlags,
    },
    /// CCD-Rabi, CCD-Ramsey or two-axis sequence sweeps, or one program file.
    #[command(allow_negative_numbers = true)]
    Dressed {
        #[command(flatten)]
        common: Common,
        /// ccd-rabi, ccd-ramsey or two-axis
        #[arg(long)]
        sequence: Option<String>,
        /// Pulse program file; overrides --sequence.
        #[arg(long)]
        program: Option<String>,
        #[command(flatten)]
        duration: DurationFlags,
        /// Number of φ_var values for two-axis (phase grid 0..4π by default).
        #[arg(long)]
        phase_count: Option<usize>,
    },
    /// Randomized benchmarking.
    #[command(allow_negative_numbers = true)]
    Rb {
        #[command(flatten)]
        common: Common,
        /// Sequence lengths, e.g. `1,2,4,...,64`.
        #[arg(long)]
        cliffords: Option<String>,
        /// Random sequences per length.
        #[arg(long)]
        k: Option<String>,
        /// pulse or ideal
        #[arg(long)]
        mode: Option<String>,
    },
    /// Baseband I/Q samples of a gate or program.
    #[command(allow_negative_numbers = true)]
    IqExport {
        #[command(flatten)]
        common: Common,
        /// Sample rate of the exported envelopes.
        #[arg(long)]
        sample_rate_hz: Option<String>,
        #[arg(long)]
        program: Option<String>,
        /// Rotation angle of the default y gate.
        #[arg(long)]
        angle: Option<String>,
    },
    /// Analytic-oracle checks.
    Selftest {
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn flag_err(flag: &str, msg: String) -> CliError {
    CliError::Usage(format!("--{flag}: {msg}"))
}

fn apply(rc: &mut RunConfig, flag: &str, key: &str, value: Option<impl ToString>) -> Result<(), CliError> {
    match value {
        Some(v) => rc.set(key, &v.to_string()).map_err(|m| flag_err(flag, m)),
        None => Ok(()),
    }
}

fn apply_common(rc: &mut RunConfig, c: &Common) -> Result<(), CliError> {
    if let Some(s) = &c.scheme {
        // an explicit scheme replaces any α pair from the config file
        rc.alpha_a = None;
        rc.alpha_p = None;
        apply(rc, "scheme", "scheme", Some(s))?;
    }
    let pairs: [(&str, &str, &Option<String>); 19] = [
        ("alpha-a", "alpha_A", &c.alpha_a),
        ("alpha-p", "alpha_P", &c.alpha_p),
        ("rabi-hz", "rabi_hz", &c.rabi_hz),
        ("mw-hz", "mw_hz", &c.mw_hz),
        ("detuning-hz", "detuning_hz", &c.detuning_hz),
        ("rabi-error-frac", "rabi_error_frac", &c.rabi_error_frac),
        ("mod-ratio", "mod_ratio", &c.mod_ratio),
        ("mod-phase", "mod_phase", &c.mod_phase),
        ("mw-phase", "mw_phase", &c.mw_phase),
        ("noise-sigma-detuning-hz", "noise_sigma_detuning_hz", &c.noise_sigma_detuning_hz),
        ("noise-sigma-rabi-frac", "noise_sigma_rabi_frac", &c.noise_sigma_rabi_frac),
        ("noise-samples", "noise_samples", &c.noise_samples),
        ("seed", "seed", &c.seed),
        ("threads", "threads", &c.threads),
        ("out", "output", &c.out),
        ("format", "format", &c.format),
        ("integrator", "integrator", &c.integrator),
        ("steps-per-period", "steps_per_period", &c.steps_per_period),
        ("readout-frame", "readout_frame", &c.readout_frame),
    ];
    for (flag, key, v) in pairs {
        apply(rc, flag, key, v.as_ref())?;
    }
    for kv in &c.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| flag_err("set", format!("expected KEY=VALUE, got `{kv}`")))?;
        rc.set(k.trim(), v).map_err(|m| flag_err("set", m))?;
    }
    Ok(())
}

fn apply_duration(rc: &mut RunConfig, d: &DurationFlags) -> Result<(), CliError> {
    apply(rc, "durations", "duration_count", d.durations)?;
    apply(rc, "duration-max", "duration_stop", d.duration_max)
}

fn apply_detuning(rc: &mut RunConfig, d: &DetuningFlags) -> Result<(), CliError> {
    if let Some(span) = d.detuning_span_hz {
        apply(rc, "detuning-span-hz", "detuning_start_hz", Some(-span / 2.0))?;
        apply(rc, "detuning-span-hz", "detuning_stop_hz", Some(span / 2.0))?;
    }
    apply(rc, "detuning-count", "detuning_count", d.detuning_count)
}

fn apply_error(rc: &mut RunConfig, e: &ErrorFlags) -> Result<(), CliError> {
    if let Some(span) = e.error_span {
        apply(rc, "error-span", "rabi_error_start", Some(-span / 2.0))?;
        apply(rc, "error-span", "rabi_error_stop", Some(span / 2.0))?;
    }
    apply(rc, "error-count", "rabi_error_count", e.error_count)
}

/// Resolved configuration for a simulation subcommand.
pub fn resolve_config(command: &Command) -> Result<RunConfig, CliError> {
    let common = match command {
        Command::Chevron { common, .. }
        | Command::RabiError { common, .. }
        | Command::Infidelity { common, .. }
        | Command::Trajectory { common, .. }
        | Command::Spectrum { common, .. }
        | Command::Dressed { common, .. }
        | Command::Rb { common, .. }
        | Command::IqExport { common, .. } => common,
        Command::Selftest { .. } => return Ok(RunConfig::default()),
    };
    let mut rc = RunConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        rc = config::apply_config_text(&text, rc)?;
    }
    apply_common(&mut rc, common)?;
    match command {
        Command::Chevron { detuning, duration, .. } => {
            apply_detuning(&mut rc, detuning)?;
            apply_duration(&mut rc, duration)?;
        }
        Command::RabiError { error, duration, .. } => {
            apply_error(&mut rc, error)?;
            apply_duration(&mut rc, duration)?;
        }
        Command::Infidelity { axis, detuning, error, .. } => {
            apply(&mut rc, "axis", "error_axis", axis.as_ref())?;
            apply_detuning(&mut rc, detuning)?;
            apply_error(&mut rc, error)?;
        }
        Command::Trajectory { total_angle, samples_per_pi2, .. } => {
            apply(&mut rc, "total-angle", "total_angle", total_angle.as_ref())?;
            apply(&mut rc, "samples-per-pi2", "samples_per_pi2", samples_per_pi2.as_ref())?;
        }
        Command::Spectrum { source, detuning, error, duration, .. } => {
            apply(&mut rc, "source", "spectrum_source", source.as_ref())?;
            apply_detuning(&mut rc, detuning)?;
            apply_error(&mut rc, error)?;
            apply_duration(&mut rc, duration)?;
        }
        Command::Dressed { sequence, program, duration, phase_count, .. } => {
            apply(&mut rc, "sequence", "sequence", sequence.as_ref())?;
            apply(&mut rc, "program", "program", program.as_ref())?;
            apply_duration(&mut rc, duration)?;
            apply(&mut rc, "phase-count", "phase_count", *phase_count)?;
        }
        Command::Rb { cliffords, k, mode, .. } => {
            apply(&mut rc, "cliffords", "rb_lengths", cliffords.as_ref())?;
            apply(&mut rc, "k", "rb_k", k.as_ref())?;
            apply(&mut rc, "mode", "rb_mode", mode.as_ref())?;
        }
        Command::IqExport { sample_rate_hz, program, angle, .. } => {
            apply(&mut rc, "sample-rate-hz", "iq_sample_rate_hz", sample_rate_hz.as_ref())?;
            apply(&mut rc, "program", "program", program.as_ref())?;
            apply(&mut rc, "angle", "iq_angle", angle.as_ref())?;
        }
        Command::Selftest { .. } => unreachable!(),
    }
    rc.validate()?;
    Ok(rc)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Chevron { .. } => "chevron",
        Command::RabiError { .. } => "rabi-error",
        Command::Infidelity { .. } => "infidelity",
        Command::Trajectory { .. } => "trajectory",
        Command::Spectrum { .. } => "spectrum",
        Command::Dressed { .. } => "dressed",
        Command::Rb { .. } => "rb",
        Command::IqExport { .. } => "iq-export",
        Command::Selftest { .. } => "selftest",
    }
}

/// Worker count: explicit value, else `CCD_SIM_THREADS`, else 0 (automatic).
pub fn resolve_threads(explicit: usize) -> Result<usize, CliError> {
    if explicit > 0 {
        return Ok(explicit);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))),
        _ => Ok(0),
    }
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Runs a simulation subcommand and returns its dataset with the provenance
/// header in front.
pub fn build_dataset(command: &Command, rc: &RunConfig, timestamp: bool) -> Result<Dataset, CliError> {
    let body = match command {
        Command::Chevron { .. } => commands::chevron(rc),
        Command::RabiError { .. } => commands::rabi_error(rc),
        Command::Infidelity { .. } => commands::infidelity(rc),
        Command::Trajectory { .. } => commands::trajectory(rc),
        Command::Spectrum { .. } => commands::spectrum_cmd(rc),
        Command::Dressed { .. } => commands::dressed(rc),
        Command::Rb { .. } => commands::rb(rc),
        Command::IqExport { .. } => commands::iq_export(rc),
        Command::Selftest { .. } => return Err(CliError::Usage("selftest produces no dataset".into())),
    }?;
    let canonical = rc.canonical_text();
    let mut ds = Dataset::default();
    ds.push_meta("tool", "ccd-sim");
    ds.push_meta("version", env!("CARGO_PKG_VERSION"));
    ds.push_meta("command", command_name(command));
    ds.push_meta("config_hash", content_hash(&canonical));
    let drive = rc.drive();
    let scheme = drive.scheme().map_or_else(
        || format!("custom(alpha_A={}, alpha_P={})", fmt_f64(drive.alpha_a), fmt_f64(drive.alpha_p)),
        |s| s.short_name().to_string(),
    );
    ds.push_meta("scheme", scheme);
    if timestamp {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        ds.push_meta("timestamp", secs.to_string());
    }
    for (k, v) in rc.entries() {
        if !config::EXECUTION_KEYS.contains(&k) {
            ds.push_meta(&format!("config.{k}"), v);
        }
    }
    ds.meta.extend(body.meta);
    ds.axes = body.axes;
    ds.values = body.values;
    Ok(ds)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    if let Command::Selftest { threads } = &cli.command {
        let n = resolve_threads(threads.unwrap_or(0))?;
        let checks = in_pool(n, selftest::run_selftest)?;
        let mut ok = true;
        for c in &checks {
            ok &= c.passed;
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{tag} {} {}", c.name, c.detail).map_err(|e| CliError::Io(e.to_string()))?;
        }
        return Ok(if ok { 0 } else { EXIT_NUMERICAL });
    }
    let rc = resolve_config(&cli.command)?;
    let timestamp = match &cli.command {
        Command::Chevron { common, .. }
        | Command::RabiError { common, .. }
        | Command::Infidelity { common, .. }
        | Command::Trajectory { common, .. }
        | Command::Spectrum { common, .. }
        | Command::Dressed { common, .. }
        | Command::Rb { common, .. }
        | Command::IqExport { common, .. } => common.timestamp,
        Command::Selftest { .. } => false,
    };
    let threads = resolve_threads(rc.threads)?;
    let ds = in_pool(threads, || build_dataset(&cli.command, &rc, timestamp))??;
    let text = match rc.format {
        Format::Csv => ds.to_csv()?,
        Format::Json => ds.to_json()?,
    };
    match &rc.output {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))?,
    }
    Ok(0)
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status. Failures print a one-line JSON record to `err`.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let e = CliError::Usage(e.render().to_string().trim().to_string());
            let _ = writeln!(err, "{}", e.record());
            return e.exit_code();
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", e.record());
            e.exit_code()
        }
    }
}
