//! Y_π gate infidelity versus a static error.

use rayon::prelude::*;

use crate::drive::{DriveConfig, Frame};
use crate::error::{CcdError, Result};
use crate::propagator::{evolve, FrameView, IntegratorSpec};
use crate::qubit::QubitState;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErrorAxis {
    /// Detuning `δ` in rad/s.
    Detuning,
    /// Rabi error `Δ_Ω` in rad/s.
    Rabi,
}

impl ErrorAxis {
    pub fn name(self) -> &'static str {
        match self {
            ErrorAxis::Detuning => "detuning",
            ErrorAxis::Rabi => "rabi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "detuning" => Some(ErrorAxis::Detuning),
            "rabi" | "rabi-error" => Some(ErrorAxis::Rabi),
            _ => None,
        }
    }
}

/// `1 − |⟨1|Y_π|0⟩|²` with Y_π a nominal π rotation: `π/ε_m` in the second
/// frame for CCD schemes, `π/Ω₀` in the first frame for the bare qubit.
pub fn y_pi_infidelity(cfg: &DriveConfig<f64>, spec: &IntegratorSpec<f64>) -> Result<f64> {
    cfg.validate()?;
    let (frame, duration) = if cfg.is_bare() {
        (Frame::First, std::f64::consts::PI / cfg.rabi)
    } else {
        if !(cfg.mod_strength > 0.0) {
            return Err(CcdError::InvalidDrive("Y_π of a CCD scheme needs ε_m > 0".into()));
        }
        (Frame::Second, std::f64::consts::PI / cfg.mod_strength)
    };
    let view = FrameView::new(cfg, frame)?;
    let out = evolve(&view, &QubitState::ground(), 0.0, duration, spec)?;
    // the ground population is the infidelity without cancellation
    Ok(out.ground_population())
}

/// `(error, infidelity)` pairs over a grid of static errors (rad/s).
pub fn infidelity_curve(
    cfg: &DriveConfig<f64>,
    axis: ErrorAxis,
    grid: &[f64],
    spec: &IntegratorSpec<f64>,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    grid.par_iter()
        .map(|&e| {
            let c = match axis {
                ErrorAxis::Detuning => cfg.with_detuning(e),
                ErrorAxis::Rabi => cfg.with_rabi_error(e),
            };
            Ok((e, y_pi_infidelity(&c, spec)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::Scheme;
    use std::f64::consts::{PI, TAU};

    fn cfg(s: Scheme) -> DriveConfig<f64> {
        DriveConfig::new(s).with_rabi(TAU * 3.6e6)
    }

    fn spec() -> IntegratorSpec<f64> {
        IntegratorSpec::rotating_default()
    }

    #[test]
    fn cmccd_exact_on_resonance() {
        assert!(y_pi_infidelity(&cfg(Scheme::Cmccd), &spec()).unwrap() <= 1e-10);
    }

    #[test]
    fn am_pm_residual_error() {
        let cm = y_pi_infidelity(&cfg(Scheme::Cmccd), &spec()).unwrap();
        for s in [Scheme::Amccd, Scheme::Pmccd] {
            let v = y_pi_infidelity(&cfg(s), &spec()).unwrap();
            assert!(v > 0.0 && v > cm, "{s}: {v:e}");
        }
    }

    #[test]
    fn bare_detuned_oracle() {
        let c = cfg(Scheme::Bare);
        let v = y_pi_infidelity(&c.with_detuning(0.1 * c.rabi), &spec()).unwrap();
        let expect = 1.0 - (1.0 / 1.01) * (1.01f64.sqrt() * PI / 2.0).sin().powi(2);
        assert!((v - expect).abs() < 1e-9);
        assert!((expect - 0.0099).abs() < 1e-4);
    }

    #[test]
    fn ccd_beats_bare_at_ten_percent_detuning() {
        let c = cfg(Scheme::Bare);
        let grid = [-0.1 * c.rabi, 0.1 * c.rabi];
        let bare = infidelity_curve(&c, ErrorAxis::Detuning, &grid, &spec()).unwrap();
        for s in Scheme::CCD {
            let ccd = infidelity_curve(&cfg(s), ErrorAxis::Detuning, &grid, &spec()).unwrap();
            for (b, x) in bare.iter().zip(&ccd) {
                assert!(x.1 < b.1, "{s}");
            }
        }
        assert!(infidelity_curve(&c, ErrorAxis::Rabi, &[0.0], &spec()).unwrap()[0].1 < 1e-12);
    }
}
