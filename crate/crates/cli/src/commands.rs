//! Subcommands. Each builds a [`Dataset`] from a [`RunConfig`]; the caller
//! adds the provenance header and writes it.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;

use ccd_core::experiments::fit::{fit_cosine, fit_decaying_sinusoid, pi_time, FitStatus};
use ccd_core::experiments::{
    bloch_trajectory, chevron_sweep, coarse_grid, dominant_frequency, dressed_sequence_experiment, infidelity_curve,
    noise_average, rabi_error_sweep, randomized_benchmarking, spectrum, DressedKind, ErrorAxis, RbOptions, ShotErrors,
    SweepGrid, SweepOptions,
};
use ccd_core::pulse::carrier_phase_for_axis;
use ccd_core::{CcdError, Drive, Program};

use crate::config::{RunConfig, SpectrumSource};
use crate::dataset::{fmt_f64, Column, Dataset};
use crate::error::CliError;

fn frame_name(f: ccd_core::Frame) -> &'static str {
    match f {
        ccd_core::Frame::Lab => "lab",
        ccd_core::Frame::First => "first",
        ccd_core::Frame::Second => "second",
    }
}

/// Drive with one shot's static errors added on top of the configured ones.
fn with_shot(cfg: &Drive, e: ShotErrors) -> Drive {
    cfg.with_detuning(cfg.detuning() + e.detuning).with_rabi_error(cfg.rabi_error + e.rabi_error_frac * cfg.rabi)
}

fn sweep_options(rc: &RunConfig) -> SweepOptions {
    SweepOptions { readout: rc.readout_frame, integrator: rc.integrator_spec() }
}

fn reject_noise(rc: &RunConfig, command: &str) -> Result<(), CliError> {
    if !rc.noise().is_noiseless() {
        return Err(CliError::Usage(format!("{command} does not take noise; set the noise sigmas to 0")));
    }
    Ok(())
}

fn sweep_meta(ds: &mut Dataset, rc: &RunConfig, cfg: &Drive, durations: &[f64]) {
    ds.push_meta("readout_frame", frame_name(rc.readout_frame.resolve(cfg)));
    ds.push_meta("coarse_grid_warning", coarse_grid(cfg, durations).to_string());
}

fn flatten(grid: &SweepGrid) -> Vec<f64> {
    grid.values.concat()
}

/// Chevron map, averaged over noise shots. Grid detunings are absolute; the
/// configured static detuning is not added to them.
fn chevron_values(rc: &RunConfig, cfg: &Drive, durations: &[f64]) -> Result<Vec<f64>, CliError> {
    let det: Vec<f64> = rc.detuning.values().iter().map(|h| TAU * h).collect();
    let opts = sweep_options(rc);
    Ok(noise_average(&rc.noise(), |e| {
        let shifted: Vec<f64> = det.iter().map(|d| d + e.detuning).collect();
        let c = cfg.with_rabi_error(cfg.rabi_error + e.rabi_error_frac * cfg.rabi);
        Ok(flatten(&chevron_sweep(&c, &shifted, durations, &opts)?))
    })?)
}

fn rabi_error_values(rc: &RunConfig, cfg: &Drive, durations: &[f64]) -> Result<Vec<f64>, CliError> {
    if rc.noise_sigma_detuning_hz != 0.0 {
        return Err(CliError::Usage(
            "rabi-error sweeps run at zero detuning; noise_sigma_detuning_hz must be 0".into(),
        ));
    }
    let errs: Vec<f64> = rc.rabi_error.values().iter().map(|f| f * cfg.rabi).collect();
    let opts = sweep_options(rc);
    Ok(noise_average(&rc.noise(), |e| {
        let shifted: Vec<f64> = errs.iter().map(|x| x + e.rabi_error_frac * cfg.rabi).collect();
        Ok(flatten(&rabi_error_sweep(cfg, &shifted, durations, &opts)?))
    })?)
}

pub fn chevron(rc: &RunConfig) -> Result<Dataset, CliError> {
    let cfg = rc.drive();
    let durations = rc.duration.values();
    let values = chevron_values(rc, &cfg, &durations)?;
    let mut ds = Dataset::default();
    sweep_meta(&mut ds, rc, &cfg, &durations);
    ds.axes.push(Column::new("detuning", "Hz", rc.detuning.values()));
    ds.axes.push(Column::new("duration", "s", durations));
    ds.values.push(Column::new("p_up", "", values));
    Ok(ds)
}

pub fn rabi_error(rc: &RunConfig) -> Result<Dataset, CliError> {
    let cfg = rc.drive().with_detuning(0.0);
    let durations = rc.duration.values();
    let values = rabi_error_values(rc, &cfg, &durations)?;
    let mut ds = Dataset::default();
    sweep_meta(&mut ds, rc, &cfg, &durations);
    ds.axes.push(Column::new("rabi_error", "fraction", rc.rabi_error.values()));
    ds.axes.push(Column::new("duration", "s", durations));
    ds.values.push(Column::new("p_up", "", values));
    Ok(ds)
}

pub fn spectrum_cmd(rc: &RunConfig) -> Result<Dataset, CliError> {
    let cfg = rc.drive();
    let durations = rc.duration.values();
    let (y_axis, values) = match rc.spectrum_source {
        SpectrumSource::Chevron => {
            (Column::new("detuning", "Hz", rc.detuning.values()), chevron_values(rc, &cfg, &durations)?)
        }
        SpectrumSource::RabiError => {
            let c = cfg.with_detuning(0.0);
            (Column::new("rabi_error", "fraction", rc.rabi_error.values()), rabi_error_values(rc, &c, &durations)?)
        }
    };
    let rows: Vec<Vec<f64>> = values.chunks(durations.len()).map(<[f64]>::to_vec).collect();
    let grid = SweepGrid {
        x_axis: ccd_core::experiments::Axis::new("duration", "s", durations.clone()),
        y_axis: ccd_core::experiments::Axis::new(&y_axis.name, &y_axis.units, y_axis.data.clone()),
        values: rows,
        meta: ccd_core::experiments::SweepMeta {
            drive: cfg,
            scheme: cfg.scheme(),
            seed: Some(rc.seed),
            frame: rc.readout_frame.resolve(&cfg),
            coarse_grid_warning: coarse_grid(&cfg, &durations),
        },
    };
    let spec = spectrum(&grid)?;
    let dominant = grid
        .values
        .iter()
        .map(|row| dominant_frequency(&durations, row).map(fmt_f64))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ds = Dataset::default();
    sweep_meta(&mut ds, rc, &cfg, &durations);
    ds.push_meta("source", rc.spectrum_source.name());
    ds.push_meta("dominant_hz", dominant.join(","));
    ds.axes.push(y_axis);
    ds.axes.push(Column::new("frequency", "Hz", spec.x_axis.values));
    ds.values.push(Column::new("magnitude", "", spec.values.concat()));
    Ok(ds)
}

pub fn infidelity(rc: &RunConfig) -> Result<Dataset, CliError> {
    let cfg = rc.drive();
    let spec = rc.integrator_spec();
    let (axis, grid_rad) = match rc.error_axis {
        ErrorAxis::Detuning => (
            Column::new("detuning", "Hz", rc.detuning.values()),
            rc.detuning.values().iter().map(|h| TAU * h).collect::<Vec<_>>(),
        ),
        ErrorAxis::Rabi => (
            Column::new("rabi_error", "fraction", rc.rabi_error.values()),
            rc.rabi_error.values().iter().map(|f| f * cfg.rabi).collect(),
        ),
    };
    let values = noise_average(&rc.noise(), |e| {
        let base = with_shot(&cfg, e);
        let shifted: Vec<f64> = match rc.error_axis {
            ErrorAxis::Detuning => grid_rad.iter().map(|d| d + e.detuning).collect(),
            ErrorAxis::Rabi => grid_rad.iter().map(|x| x + e.rabi_error_frac * cfg.rabi).collect(),
        };
        Ok(infidelity_curve(&base, rc.error_axis, &shifted, &spec)?.into_iter().map(|p| p.1).collect())
    })?;
    let mut ds = Dataset::default();
    ds.push_meta("error_axis", rc.error_axis.name());
    ds.push_meta("frame", if cfg.is_bare() { "first" } else { "second" });
    ds.axes.push(axis);
    ds.values.push(Column::new("infidelity", "", values));
    Ok(ds)
}

pub fn trajectory(rc: &RunConfig) -> Result<Dataset, CliError> {
    reject_noise(rc, "trajectory")?;
    let r = bloch_trajectory(&rc.drive(), rc.total_angle, rc.samples_per_pi2, &rc.integrator_spec())?;
    let mut ds = Dataset::default();
    ds.push_meta("frame", frame_name(r.frame));
    ds.push_meta("markers", r.markers.len().to_string());
    ds.push_meta("spread", fmt_f64(r.spread));
    let n = r.samples.len();
    let marker = (0..n)
        .map(|k| if k > 0 && k % rc.samples_per_pi2 == 0 { (k / rc.samples_per_pi2) as f64 } else { 0.0 })
        .collect();
    ds.axes.push(Column::new("t", "s", r.samples.iter().map(|s| s.0).collect()));
    ds.values.push(Column::new("x", "", r.samples.iter().map(|s| s.1.x).collect()));
    ds.values.push(Column::new("y", "", r.samples.iter().map(|s| s.1.y).collect()));
    ds.values.push(Column::new("z", "", r.samples.iter().map(|s| s.1.z).collect()));
    ds.values.push(Column::new("marker", "", marker));
    Ok(ds)
}

fn load_program(path: &Path, cfg: &Drive) -> Result<Program, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(Program::parse(&text, *cfg)?)
}

fn program_dataset(rc: &RunConfig, path: &Path) -> Result<Dataset, CliError> {
    let cfg = rc.drive();
    let compiled = load_program(path, &cfg)?.compile()?;
    let spec = rc.integrator_spec();
    let p = noise_average(&rc.noise(), |e| {
        let shot = with_shot(&cfg, e);
        let c = compiled.with_errors(shot.detuning(), shot.rabi_error);
        Ok(vec![c.spin_up_fraction(&spec)?])
    })?;
    let mut ds = Dataset::default();
    ds.push_meta("program", path.display().to_string());
    ds.push_meta("segments", compiled.pieces().len().to_string());
    ds.axes.push(Column::new("duration", "s", vec![compiled.total_duration()]));
    ds.values.push(Column::new("p_up", "", p));
    Ok(ds)
}

pub fn dressed(rc: &RunConfig) -> Result<Dataset, CliError> {
    if let Some(path) = &rc.program {
        return program_dataset(rc, path);
    }
    let cfg = rc.drive();
    let kind = rc.sequence;
    let xs = match kind {
        DressedKind::TwoAxis => rc.phase.values(),
        _ => rc.duration.values(),
    };
    let spec = rc.integrator_spec();
    let p = noise_average(&rc.noise(), |e| {
        Ok(dressed_sequence_experiment(kind, &with_shot(&cfg, e), &xs, &spec)?.into_iter().map(|v| v.1).collect())
    })?;
    let mut ds = Dataset::default();
    ds.push_meta("sequence", kind.name());
    match kind {
        DressedKind::TwoAxis => match fit_cosine(&xs, &p, TAU) {
            Ok(f) => {
                ds.push_meta("fit_amplitude", fmt_f64(f.amplitude));
                ds.push_meta("fit_phase", fmt_f64(f.phase));
                ds.push_meta("fit_offset", fmt_f64(f.offset));
                ds.push_meta("fit_r_squared", fmt_f64(f.r_squared));
            }
            Err(e) => ds.push_meta("fit_status", format!("failed: {e}")),
        },
        _ => match fit_decaying_sinusoid(&xs, &p) {
            Ok(f) => {
                let status = match &f.status {
                    FitStatus::Converged => "converged".to_string(),
                    FitStatus::Unbounded => "unbounded".to_string(),
                    FitStatus::Failed(m) => format!("failed: {m}"),
                };
                ds.push_meta("fit_status", status);
                ds.push_meta("fit_frequency_hz", fmt_f64(f.frequency));
                ds.push_meta("fit_t2_s", fmt_f64(f.decay_time));
                ds.push_meta("fit_amplitude", fmt_f64(f.amplitude));
                ds.push_meta("fit_residual_rms", fmt_f64(f.residual_rms));
                if let Some(q) = f.quality_factor(pi_time(&cfg)) {
                    ds.push_meta("quality_factor", fmt_f64(q));
                }
            }
            Err(e) => ds.push_meta("fit_status", format!("failed: {e}")),
        },
    }
    let (name, units) = kind.sweep_axis();
    ds.axes.push(Column::new(name, units, xs));
    ds.values.push(Column::new("p_up", "", p));
    Ok(ds)
}

pub fn rb(rc: &RunConfig) -> Result<Dataset, CliError> {
    let cfg = rc.drive();
    let opts = RbOptions {
        lengths: rc.rb_lengths.clone(),
        k: rc.rb_k,
        seed: rc.seed,
        noise: rc.noise(),
        static_detuning: cfg.detuning(),
        static_rabi_error: cfg.rabi_error,
        mode: rc.rb_mode,
        integrator: rc.integrator_spec(),
    };
    let r = randomized_benchmarking(&cfg, &opts)?;
    let mut ds = Dataset::default();
    ds.push_meta("k", r.k.to_string());
    ds.push_meta("amplitude", fmt_f64(r.amplitude));
    ds.push_meta("f_c", fmt_f64(r.f_c));
    ds.push_meta("f", fmt_f64(r.f));
    if opts.static_detuning != 0.0 || opts.static_rabi_error != 0.0 {
        let reference =
            randomized_benchmarking(&cfg, &RbOptions { static_detuning: 0.0, static_rabi_error: 0.0, ..opts.clone() })?;
        ds.push_meta("f_reference", fmt_f64(reference.f));
        ds.push_meta("f_normalized", fmt_f64(r.f / reference.f));
    }
    ds.push_meta("fit_residual_rms", fmt_f64(r.fit_residual));
    ds.push_meta("fit_ok", r.fit_ok.to_string());
    if !r.warnings.is_empty() {
        ds.push_meta("warnings", r.warnings.join("; "));
    }
    let p = 2.0 * r.f_c - 1.0;
    ds.axes.push(Column::new("length", "", r.lengths.iter().map(|&m| m as f64).collect()));
    ds.values.push(Column::new("signal", "", r.signal.clone()));
    ds.values.push(Column::new("std_err", "", r.signal_std_err.clone()));
    ds.values.push(Column::new("fit", "", r.lengths.iter().map(|&m| r.amplitude * p.powi(m as i32)).collect()));
    Ok(ds)
}

/// Default I/Q program: one rotation by `iq_angle` about y, then readout padding.
fn iq_program(rc: &RunConfig, cfg: &Drive) -> Result<Program, CliError> {
    if let Some(path) = &rc.program {
        return load_program(path, cfg);
    }
    let mut p = Program::new(*cfg);
    let mut phi = carrier_phase_for_axis(FRAC_PI_2, cfg);
    if rc.iq_angle < 0.0 {
        phi += PI;
    }
    p.gate(rc.iq_angle.abs(), phi)?;
    p.pad_for_readout()?;
    Ok(p)
}

pub fn iq_export(rc: &RunConfig) -> Result<Dataset, CliError> {
    reject_noise(rc, "iq-export")?;
    let cfg = rc.drive();
    let compiled = iq_program(rc, &cfg)?.compile()?;
    let total = compiled.total_duration();
    let dt = 1.0 / rc.iq_sample_rate_hz;
    let n = (total / dt).ceil() as usize;
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).filter(|&t| t < total).collect();
    let samples = compiled.iq_samples(&times);
    let mut ds = Dataset::default();
    ds.push_meta("carrier_hz", fmt_f64(rc.mw_hz));
    ds.push_meta("sample_rate_hz", fmt_f64(rc.iq_sample_rate_hz));
    ds.push_meta("duration_s", fmt_f64(total));
    ds.push_meta("convention", "drive = I*cos(2*pi*carrier_hz*t) - Q*sin(2*pi*carrier_hz*t), rad/s");
    ds.axes.push(Column::new("t", "s", times));
    ds.values.push(Column::new("I", "rad/s", samples.iter().map(|s| s.i).collect()));
    ds.values.push(Column::new("Q", "rad/s", samples.iter().map(|s| s.q).collect()));
    Ok(ds)
}

impl From<CcdError> for CliError {
    fn from(e: CcdError) -> Self {
        CliError::Core(e)
    }
}
