//! Chevron (detuning × duration) and Rabi-error (error × duration) maps of the
//! spin-up fraction, starting from |0⟩.

use rayon::prelude::*;

use super::check_ascending;
use crate::drive::{DriveConfig, Frame, Scheme};
use crate::error::{CcdError, Result};
use crate::propagator::{evolve_sampled, FrameView, IntegratorSpec};
use crate::qubit::QubitState;

/// Frame whose σ_z populations are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ReadoutFrame {
    /// Second frame for CCD schemes with ε_m > 0, first frame otherwise.
    #[default]
    Auto,
    /// Plain Rabi readout: first-frame (equivalently lab) populations.
    First,
    /// Readout-matched populations of the double-dressed qubit.
    Second,
}

impl ReadoutFrame {
    pub fn resolve(self, cfg: &DriveConfig<f64>) -> Frame {
        match self {
            ReadoutFrame::First => Frame::First,
            ReadoutFrame::Second => Frame::Second,
            ReadoutFrame::Auto => {
                if !cfg.is_bare() && cfg.mod_strength > 0.0 {
                    Frame::Second
                } else {
                    Frame::First
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReadoutFrame::Auto => "auto",
            ReadoutFrame::First => "first",
            ReadoutFrame::Second => "second",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "auto" => Some(ReadoutFrame::Auto),
            "first" => Some(ReadoutFrame::First),
            "second" => Some(ReadoutFrame::Second),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub readout: ReadoutFrame,
    pub integrator: IntegratorSpec<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { readout: ReadoutFrame::Auto, integrator: IntegratorSpec::rotating_default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub units: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, units: &str, values: Vec<f64>) -> Self {
        Self { name: name.into(), units: units.into(), values }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepMeta {
    pub drive: DriveConfig<f64>,
    pub scheme: Option<Scheme>,
    pub seed: Option<u64>,
    pub frame: Frame,
    /// Set when the duration grid has fewer than 8 points per period of the
    /// expected oscillation (ε_m for CCD, Ω₀ for bare).
    pub coarse_grid_warning: bool,
}

/// `values[i][j]`: spin-up fraction for the i-th y value and j-th x value.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub values: Vec<Vec<f64>>,
    pub meta: SweepMeta,
}

impl SweepGrid {
    /// Checks the shape and range invariants.
    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.y_axis.values.len() {
            return Err(CcdError::Consistency("row count does not match the y axis".into()));
        }
        for row in &self.values {
            if row.len() != self.x_axis.values.len() {
                return Err(CcdError::Consistency("column count does not match the x axis".into()));
            }
            if row.iter().any(|v| !(*v >= -1e-9 && *v <= 1.0 + 1e-9)) {
                return Err(CcdError::Consistency("population outside [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }
}

/// True when the duration grid has fewer than 8 points per period of the
/// expected oscillation.
pub fn coarse_grid(cfg: &DriveConfig<f64>, durations: &[f64]) -> bool {
    if durations.len() < 2 {
        return true;
    }
    let rate = if cfg.is_bare() || cfg.mod_strength <= 0.0 { cfg.rabi } else { cfg.mod_strength };
    let dt = (durations[durations.len() - 1] - durations[0]) / (durations.len() - 1) as f64;
    dt > std::f64::consts::TAU / rate / 8.0
}

fn check_durations(durations: &[f64]) -> Result<()> {
    check_ascending("duration", durations)?;
    if durations[0] < 0.0 {
        return Err(CcdError::Validation("durations must be ≥ 0".into()));
    }
    Ok(())
}

fn populations(
    cfg: &DriveConfig<f64>,
    frame: Frame,
    durations: &[f64],
    spec: &IntegratorSpec<f64>,
) -> Result<Vec<f64>> {
    let view = FrameView::new(cfg, frame)?;
    let states = evolve_sampled(&view, &QubitState::ground(), 0.0, durations, spec)?;
    Ok(states.iter().map(|s| s.excited_population()).collect())
}

fn sweep(
    cfg: &DriveConfig<f64>,
    configs: Vec<DriveConfig<f64>>,
    y_axis: Axis,
    durations: &[f64],
    opts: &SweepOptions,
) -> Result<SweepGrid> {
    cfg.validate()?;
    opts.integrator.validate()?;
    check_durations(durations)?;
    let frame = opts.readout.resolve(cfg);
    let values =
        configs.par_iter().map(|c| populations(c, frame, durations, &opts.integrator)).collect::<Result<Vec<_>>>()?;
    let grid = SweepGrid {
        x_axis: Axis::new("duration", "s", durations.to_vec()),
        y_axis,
        values,
        meta: SweepMeta {
            drive: *cfg,
            scheme: cfg.scheme(),
            seed: None,
            frame,
            coarse_grid_warning: coarse_grid(cfg, durations),
        },
    };
    grid.validate()?;
    Ok(grid)
}

/// Spin-up fraction versus detuning `δ` (rad/s) and drive duration (s). The
/// y axis is reported as `δ/2π` in Hz.
pub fn chevron_sweep(
    cfg: &DriveConfig<f64>,
    detunings: &[f64],
    durations: &[f64],
    opts: &SweepOptions,
) -> Result<SweepGrid> {
    check_ascending("detuning", detunings)?;
    let configs = detunings.iter().map(|&d| cfg.with_detuning(d)).collect();
    let axis = Axis::new("detuning", "Hz", detunings.iter().map(|d| d / std::f64::consts::TAU).collect());
    sweep(cfg, configs, axis, durations, opts)
}

/// Spin-up fraction versus static Rabi error `Δ_Ω` (rad/s) and duration at
/// zero detuning. The y axis is reported as the fraction `Δ_Ω/Ω₀`.
pub fn rabi_error_sweep(
    cfg: &DriveConfig<f64>,
    rabi_errors: &[f64],
    durations: &[f64],
    opts: &SweepOptions,
) -> Result<SweepGrid> {
    check_ascending("rabi error", rabi_errors)?;
    let base = cfg.with_detuning(0.0);
    let configs = rabi_errors.iter().map(|&e| base.with_rabi_error(e)).collect();
    let axis = Axis::new("rabi_error", "fraction", rabi_errors.iter().map(|e| e / cfg.rabi).collect());
    sweep(&base, configs, axis, durations, opts)
}
