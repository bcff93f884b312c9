//! Run configuration: a flat `key = value` text format with `#` comments.
//!
//! Frequencies (`*_hz`) are in Hz and converted to rad/s when the drive is
//! built; angles are radians and also accept `pi` forms; durations are seconds.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::path::PathBuf;

use ccd_core::experiments::{DressedKind, ErrorAxis, NoiseSpec, RbMode, ReadoutFrame};
use ccd_core::pulse::parse_angle;
use ccd_core::{Drive, Integrator, IntegratorSpec, Method, Scheme};

use crate::dataset::fmt_f64;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("constraint violated: {0}")]
    Constraint(String),
}

/// Output payload encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

/// Which sweep the `spectrum` command transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SpectrumSource {
    #[default]
    Chevron,
    RabiError,
}

impl SpectrumSource {
    pub fn name(self) -> &'static str {
        match self {
            SpectrumSource::Chevron => "chevron",
            SpectrumSource::RabiError => "rabi-error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "chevron" => Some(SpectrumSource::Chevron),
            "rabi-error" | "rabi_error" => Some(SpectrumSource::RabiError),
            _ => None,
        }
    }
}

/// Inclusive linear grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub const fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn values(&self) -> Vec<f64> {
        ccd_core::experiments::linspace(self.start, self.stop, self.count)
    }

    fn check(&self, name: &str) -> Result<(), ConfigError> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(ConfigError::Constraint(format!("{name} grid bounds must be finite")));
        }
        if self.count == 0 {
            return Err(ConfigError::Constraint(format!("{name}_count must be ≥ 1")));
        }
        if self.count > 1 && self.stop.partial_cmp(&self.start) != Some(std::cmp::Ordering::Greater) {
            return Err(ConfigError::Constraint(format!("{name} grid needs stop > start when count > 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Named scheme; sets α_A/α_P unless those are given explicitly.
    pub scheme: Option<Scheme>,
    pub alpha_a: Option<f64>,
    pub alpha_p: Option<f64>,
    pub rabi_hz: f64,
    pub mw_hz: f64,
    pub detuning_hz: f64,
    /// Δ_Ω/Ω₀
    pub rabi_error_frac: f64,
    /// ε_m/Ω₀
    pub mod_ratio: f64,
    pub mod_phase: f64,
    pub mw_phase: f64,
    /// seconds
    pub duration: Grid,
    pub detuning: Grid,
    /// fraction of Ω₀
    pub rabi_error: Grid,
    /// radians, for the two-axis sequence
    pub phase: Grid,
    pub noise_sigma_detuning_hz: f64,
    pub noise_sigma_rabi_frac: f64,
    pub noise_samples: usize,
    pub rb_lengths: Vec<usize>,
    pub rb_k: usize,
    pub rb_mode: RbMode,
    pub total_angle: f64,
    pub samples_per_pi2: usize,
    pub sequence: DressedKind,
    pub error_axis: ErrorAxis,
    pub spectrum_source: SpectrumSource,
    pub program: Option<PathBuf>,
    pub iq_sample_rate_hz: f64,
    pub iq_angle: f64,
    pub readout_frame: ReadoutFrame,
    pub integrator: Method,
    pub steps_per_period: u32,
    pub seed: u64,
    /// 0 = available parallelism
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: None,
            alpha_a: None,
            alpha_p: None,
            rabi_hz: 3.6e6,
            mw_hz: 15e9,
            detuning_hz: 0.0,
            rabi_error_frac: 0.0,
            mod_ratio: 0.25,
            mod_phase: FRAC_PI_2,
            mw_phase: 0.0,
            duration: Grid::new(0.0, 5e-6, 512),
            detuning: Grid::new(-7.2e6, 7.2e6, 101),
            rabi_error: Grid::new(-0.2, 0.2, 41),
            phase: Grid::new(0.0, 2.0 * TAU, 65),
            noise_sigma_detuning_hz: 0.0,
            noise_sigma_rabi_frac: 0.0,
            noise_samples: 1,
            rb_lengths: vec![1, 2, 4, 8, 16, 32, 64],
            rb_k: 15,
            rb_mode: RbMode::Pulse,
            total_angle: 20.0 * PI,
            samples_per_pi2: 8,
            sequence: DressedKind::CcdRabi,
            error_axis: ErrorAxis::Detuning,
            spectrum_source: SpectrumSource::Chevron,
            program: None,
            iq_sample_rate_hz: 1e9,
            iq_angle: PI,
            readout_frame: ReadoutFrame::Auto,
            integrator: Method::CommutatorFree4,
            steps_per_period: IntegratorSpec::<f64>::rotating_default().steps_per_fastest_period,
            seed: 0,
            threads: 0,
            output: None,
            format: Format::Csv,
        }
    }
}

/// Every accepted key, in canonical emission order.
pub const KEYS: &[&str] = &[
    "scheme",
    "alpha_A",
    "alpha_P",
    "rabi_hz",
    "mw_hz",
    "detuning_hz",
    "rabi_error_frac",
    "mod_ratio",
    "mod_phase",
    "mw_phase",
    "duration_start",
    "duration_stop",
    "duration_count",
    "detuning_start_hz",
    "detuning_stop_hz",
    "detuning_count",
    "rabi_error_start",
    "rabi_error_stop",
    "rabi_error_count",
    "phase_start",
    "phase_stop",
    "phase_count",
    "noise_sigma_detuning_hz",
    "noise_sigma_rabi_frac",
    "noise_samples",
    "rb_lengths",
    "rb_k",
    "rb_mode",
    "total_angle",
    "samples_per_pi2",
    "sequence",
    "error_axis",
    "spectrum_source",
    "program",
    "iq_sample_rate_hz",
    "iq_angle",
    "readout_frame",
    "integrator",
    "steps_per_period",
    "seed",
    "threads",
    "output",
    "format",
];

/// Keys that only steer execution and never change the produced data.
pub const EXECUTION_KEYS: &[&str] = &["threads", "output", "format"];

fn real(v: &str) -> Result<f64, String> {
    v.parse::<f64>().map_err(|_| format!("expected a number, got `{v}`"))
}

fn angle(v: &str) -> Result<f64, String> {
    parse_angle::<f64>(v).ok_or_else(|| format!("expected an angle in radians (or a pi form), got `{v}`"))
}

fn count<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse::<T>().map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

/// Expands `1,2,4,...,64` (geometric when the two terms before `...` have an
/// integer ratio above 1, arithmetic otherwise) or a plain comma list.
pub fn parse_lengths(v: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let mut out: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < parts.len() {
        if parts[i] == "..." {
            let end: usize = parts
                .get(i + 1)
                .ok_or("`...` must be followed by a final length")?
                .parse()
                .map_err(|_| format!("bad length after `...`: `{}`", parts[i + 1]))?;
            if out.len() < 2 {
                return Err("`...` needs two lengths before it".into());
            }
            let (a, b) = (out[out.len() - 2], out[out.len() - 1]);
            let geometric = a > 0 && b > a && b % a == 0;
            let mut next = b;
            loop {
                next = if geometric { next * (b / a) } else { next + b.saturating_sub(a) };
                if next > end || next == *out.last().unwrap() {
                    break;
                }
                out.push(next);
            }
            if *out.last().unwrap() != end {
                return Err(format!("`{v}` does not reach {end} by the pattern {a}, {b}"));
            }
            i += 2;
        } else {
            out.push(parts[i].parse().map_err(|_| format!("bad length `{}`", parts[i]))?);
            i += 1;
        }
    }
    if out.is_empty() {
        return Err("empty length list".into());
    }
    Ok(out)
}

impl RunConfig {
    /// Sets one key from its text value. Errors carry only the message; the
    /// caller adds the position.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let v = v.trim();
        match key {
            "scheme" => self.scheme = Some(v.parse::<Scheme>().map_err(|e| e.to_string())?),
            "alpha_A" => self.alpha_a = Some(real(v)?),
            "alpha_P" => self.alpha_p = Some(real(v)?),
            "rabi_hz" => self.rabi_hz = real(v)?,
            "mw_hz" => self.mw_hz = real(v)?,
            "detuning_hz" => self.detuning_hz = real(v)?,
            "rabi_error_frac" => self.rabi_error_frac = real(v)?,
            "mod_ratio" => self.mod_ratio = real(v)?,
            "mod_phase" => self.mod_phase = angle(v)?,
            "mw_phase" => self.mw_phase = angle(v)?,
            "duration_start" => self.duration.start = real(v)?,
            "duration_stop" => self.duration.stop = real(v)?,
            "duration_count" => self.duration.count = count(v)?,
            "detuning_start_hz" => self.detuning.start = real(v)?,
            "detuning_stop_hz" => self.detuning.stop = real(v)?,
            "detuning_count" => self.detuning.count = count(v)?,
            "rabi_error_start" => self.rabi_error.start = real(v)?,
            "rabi_error_stop" => self.rabi_error.stop = real(v)?,
            "rabi_error_count" => self.rabi_error.count = count(v)?,
            "phase_start" => self.phase.start = angle(v)?,
            "phase_stop" => self.phase.stop = angle(v)?,
            "phase_count" => self.phase.count = count(v)?,
            "noise_sigma_detuning_hz" => self.noise_sigma_detuning_hz = real(v)?,
            "noise_sigma_rabi_frac" => self.noise_sigma_rabi_frac = real(v)?,
            "noise_samples" => self.noise_samples = count(v)?,
            "rb_lengths" => self.rb_lengths = parse_lengths(v)?,
            "rb_k" => self.rb_k = count(v)?,
            "rb_mode" => {
                self.rb_mode = match v {
                    "pulse" => RbMode::Pulse,
                    "ideal" => RbMode::IdealMatrices,
                    _ => return Err(format!("rb_mode must be pulse or ideal, got `{v}`")),
                }
            }
            "total_angle" => self.total_angle = angle(v)?,
            "samples_per_pi2" => self.samples_per_pi2 = count(v)?,
            "sequence" => {
                self.sequence = DressedKind::parse(v)
                    .ok_or_else(|| format!("sequence must be ccd-rabi, ccd-ramsey or two-axis, got `{v}`"))?
            }
            "error_axis" => {
                self.error_axis =
                    ErrorAxis::parse(v).ok_or_else(|| format!("error_axis must be detuning or rabi, got `{v}`"))?
            }
            "spectrum_source" => {
                self.spectrum_source = SpectrumSource::parse(v)
                    .ok_or_else(|| format!("spectrum_source must be chevron or rabi-error, got `{v}`"))?
            }
            "program" => self.program = path(v),
            "iq_sample_rate_hz" => self.iq_sample_rate_hz = real(v)?,
            "iq_angle" => self.iq_angle = angle(v)?,
            "readout_frame" => {
                self.readout_frame = ReadoutFrame::parse(v)
                    .ok_or_else(|| format!("readout_frame must be auto, first or second, got `{v}`"))?
            }
            "integrator" => {
                self.integrator =
                    Method::parse(v).ok_or_else(|| format!("integrator must be cf4 or midpoint, got `{v}`"))?
            }
            "steps_per_period" => self.steps_per_period = count(v)?,
            "seed" => self.seed = count(v)?,
            "threads" => self.threads = count(v)?,
            "output" => self.output = path(v),
            "format" => {
                self.format = Format::parse(v).ok_or_else(|| format!("format must be csv or json, got `{v}`"))?
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// `(key, value)` pairs in canonical order; unset optional keys are omitted.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = fmt_f64;
        let mut out: Vec<(&'static str, String)> = Vec::with_capacity(KEYS.len());
        if let Some(s) = self.scheme {
            out.push(("scheme", s.short_name().into()));
        }
        if let Some(a) = self.alpha_a {
            out.push(("alpha_A", f(a)));
        }
        if let Some(p) = self.alpha_p {
            out.push(("alpha_P", f(p)));
        }
        let lengths = self.rb_lengths.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
        let rb_mode = match self.rb_mode {
            RbMode::Pulse => "pulse",
            RbMode::IdealMatrices => "ideal",
        };
        out.extend([
            ("rabi_hz", f(self.rabi_hz)),
            ("mw_hz", f(self.mw_hz)),
            ("detuning_hz", f(self.detuning_hz)),
            ("rabi_error_frac", f(self.rabi_error_frac)),
            ("mod_ratio", f(self.mod_ratio)),
            ("mod_phase", f(self.mod_phase)),
            ("mw_phase", f(self.mw_phase)),
            ("duration_start", f(self.duration.start)),
            ("duration_stop", f(self.duration.stop)),
            ("duration_count", self.duration.count.to_string()),
            ("detuning_start_hz", f(self.detuning.start)),
            ("detuning_stop_hz", f(self.detuning.stop)),
            ("detuning_count", self.detuning.count.to_string()),
            ("rabi_error_start", f(self.rabi_error.start)),
            ("rabi_error_stop", f(self.rabi_error.stop)),
            ("rabi_error_count", self.rabi_error.count.to_string()),
            ("phase_start", f(self.phase.start)),
            ("phase_stop", f(self.phase.stop)),
            ("phase_count", self.phase.count.to_string()),
            ("noise_sigma_detuning_hz", f(self.noise_sigma_detuning_hz)),
            ("noise_sigma_rabi_frac", f(self.noise_sigma_rabi_frac)),
            ("noise_samples", self.noise_samples.to_string()),
            ("rb_lengths", lengths),
            ("rb_k", self.rb_k.to_string()),
            ("rb_mode", rb_mode.into()),
            ("total_angle", f(self.total_angle)),
            ("samples_per_pi2", self.samples_per_pi2.to_string()),
            ("sequence", self.sequence.name().into()),
            ("error_axis", self.error_axis.name().into()),
            ("spectrum_source", self.spectrum_source.name().into()),
        ]);
        if let Some(p) = &self.program {
            out.push(("program", p.display().to_string()));
        }
        out.extend([
            ("iq_sample_rate_hz", f(self.iq_sample_rate_hz)),
            ("iq_angle", f(self.iq_angle)),
            ("readout_frame", self.readout_frame.name().into()),
            ("integrator", self.integrator.name().into()),
            ("steps_per_period", self.steps_per_period.to_string()),
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
        ]);
        if let Some(p) = &self.output {
            out.push(("output", p.display().to_string()));
        }
        out.push(("format", self.format.name().into()));
        out
    }

    /// `(α_A, α_P)` after applying the scheme default.
    pub fn alphas(&self) -> (f64, f64) {
        let (a, p) = self.scheme.unwrap_or(Scheme::Cmccd).alphas::<f64>();
        (self.alpha_a.unwrap_or(a), self.alpha_p.unwrap_or(p))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = |m: String| Err(ConfigError::Constraint(m));
        let (a, p) = self.alphas();
        if let Some(s) = self.scheme {
            let (sa, sp) = s.alphas::<f64>();
            if (self.alpha_a.is_some() || self.alpha_p.is_some()) && (a, p) != (sa, sp) {
                return c(format!(
                    "scheme = {s} implies alpha_A = {sa}, alpha_P = {sp}, but alpha_A = {a}, alpha_P = {p} were given"
                ));
            }
        }
        let sum = a + p;
        if !(a == 0.0 && p == 0.0) && (sum - 1.0).abs() > 1e-12 {
            return c(format!("alpha_A + alpha_P must be 1 (or both 0), got {a} + {p} = {sum}"));
        }
        if !(self.rabi_hz > 0.0 && self.rabi_hz.is_finite()) {
            return c(format!("rabi_hz must be positive, got {}", self.rabi_hz));
        }
        if !(self.mw_hz >= 0.0 && self.mw_hz.is_finite()) {
            return c(format!("mw_hz must be finite and ≥ 0, got {}", self.mw_hz));
        }
        if !(self.mod_ratio >= 0.0 && self.mod_ratio.is_finite()) {
            return c(format!("mod_ratio must be ≥ 0, got {}", self.mod_ratio));
        }
        for (name, v) in [
            ("detuning_hz", self.detuning_hz),
            ("rabi_error_frac", self.rabi_error_frac),
            ("mod_phase", self.mod_phase),
            ("mw_phase", self.mw_phase),
        ] {
            if !v.is_finite() {
                return c(format!("{name} must be finite"));
            }
        }
        self.duration.check("duration")?;
        if self.duration.start < 0.0 {
            return c("duration_start must be ≥ 0".into());
        }
        self.detuning.check("detuning")?;
        self.rabi_error.check("rabi_error")?;
        self.phase.check("phase")?;
        if !(self.noise_sigma_detuning_hz >= 0.0 && self.noise_sigma_rabi_frac >= 0.0) {
            return c("noise sigmas must be ≥ 0".into());
        }
        if self.noise_samples == 0 {
            return c("noise_samples must be ≥ 1".into());
        }
        if self.rb_lengths.is_empty() || self.rb_lengths[0] == 0 || self.rb_lengths.windows(2).any(|w| w[1] <= w[0]) {
            return c("rb_lengths must be positive and strictly increasing".into());
        }
        if self.rb_k == 0 {
            return c("rb_k must be ≥ 1".into());
        }
        if self.samples_per_pi2 == 0 {
            return c("samples_per_pi2 must be ≥ 1".into());
        }
        if !(self.iq_sample_rate_hz > 0.0 && self.iq_sample_rate_hz.is_finite()) {
            return c("iq_sample_rate_hz must be positive".into());
        }
        if self.steps_per_period < IntegratorSpec::<f64>::MIN_STEPS_PER_PERIOD {
            return c(format!("steps_per_period must be ≥ {}", IntegratorSpec::<f64>::MIN_STEPS_PER_PERIOD));
        }
        Ok(())
    }

    /// The drive in rad/s.
    pub fn drive(&self) -> Drive {
        let (a, p) = self.alphas();
        Drive::new(self.scheme.unwrap_or(Scheme::Cmccd))
            .with_alphas(a, p)
            .with_rabi(TAU * self.rabi_hz)
            .with_mod_ratio(self.mod_ratio)
            .with_carrier(TAU * self.mw_hz)
            .with_detuning(TAU * self.detuning_hz)
            .with_rabi_error(self.rabi_error_frac * TAU * self.rabi_hz)
            .with_mod_phase(self.mod_phase)
            .with_mw_phase(self.mw_phase)
    }

    pub fn integrator_spec(&self) -> Integrator {
        IntegratorSpec::rotating_default().with_method(self.integrator).with_steps_per_period(self.steps_per_period)
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec::new(TAU * self.noise_sigma_detuning_hz, self.noise_sigma_rabi_frac, self.noise_samples, self.seed)
    }

    /// Canonical text of the keys that determine the data (execution keys left out).
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            if !EXECUTION_KEYS.contains(&k) {
                s.push_str(&format!("{k} = {v}\n"));
            }
        }
        s
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Character column (1-based) of byte offset `at` in `line`.
fn column(line: &str, at: usize) -> usize {
    line[..at].chars().count() + 1
}

/// Applies `text` on top of `base` without the final validation, so later
/// overrides can still repair it. Keys may appear once per file.
pub fn apply_config_text(text: &str, mut cfg: RunConfig) -> Result<RunConfig, ConfigError> {
    let mut seen: Vec<(String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let err = |at: usize, message: String| ConfigError::Parse { line: line_no, column: column(line, at), message };
        let Some(eq) = line.find('=') else {
            let at = line.len() - line.trim_start().len();
            return Err(err(at, "expected `key = value`".into()));
        };
        let key = line[..eq].trim();
        let key_at = line.len() - line.trim_start().len();
        if key.is_empty() {
            return Err(err(key_at, "missing key before `=`".into()));
        }
        if !KEYS.contains(&key) {
            return Err(err(key_at, format!("unknown key `{key}`")));
        }
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
            return Err(err(key_at, format!("duplicate key `{key}` (first set on line {first})")));
        }
        seen.push((key.to_string(), line_no));
        let value = &line[eq + 1..];
        let value_at = eq + 1 + (value.len() - value.trim_start().len());
        cfg.set(key, value).map_err(|m| err(value_at, m))?;
    }
    Ok(cfg)
}

/// Applies `text` on top of `base` and validates the result.
pub fn parse_config_onto(text: &str, base: RunConfig) -> Result<RunConfig, ConfigError> {
    let cfg = apply_config_text(text, base)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_onto(text, RunConfig::default())
}

pub fn emit_config(cfg: &RunConfig) -> String {
    cfg.to_string()
}
