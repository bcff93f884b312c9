//! Control sequences for the double-dressed qubit: CCD-Rabi, CCD-Ramsey and
//! two-axis phase sweeps.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::drive::DriveConfig;
use crate::error::{CcdError, Result};
use crate::propagator::IntegratorSpec;
use crate::pulse::{carrier_phase_for_axis, check_boundary_rule, PulseProgram, PulseSegment, SegmentKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DressedKind {
    /// y-axis gate of duration `t_c`, then readout padding.
    CcdRabi,
    /// π/2 — idle `t_c` — π/2, then readout padding.
    CcdRamsey,
    /// π/2 at φ_mw = 0, then π/2 at φ_mw = φ_var, then readout padding.
    TwoAxis,
}

impl DressedKind {
    pub fn name(self) -> &'static str {
        match self {
            DressedKind::CcdRabi => "ccd-rabi",
            DressedKind::CcdRamsey => "ccd-ramsey",
            DressedKind::TwoAxis => "two-axis",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().replace('_', "-").as_str() {
            "ccd-rabi" => Some(DressedKind::CcdRabi),
            "ccd-ramsey" => Some(DressedKind::CcdRamsey),
            "two-axis" => Some(DressedKind::TwoAxis),
            _ => None,
        }
    }

    /// Name and units of the swept value.
    pub fn sweep_axis(self) -> (&'static str, &'static str) {
        match self {
            DressedKind::CcdRabi | DressedKind::CcdRamsey => ("t_c", "s"),
            DressedKind::TwoAxis => ("phi_var", "rad"),
        }
    }
}

/// The pulse program for one sweep value.
pub fn dressed_program(kind: DressedKind, cfg: &DriveConfig<f64>, x: f64) -> Result<PulseProgram<f64>> {
    let mut p = PulseProgram::new(*cfg);
    // y axis: azimuth π/2
    let phi_y = carrier_phase_for_axis(FRAC_PI_2, cfg);
    match kind {
        DressedKind::CcdRabi => {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(CcdError::Validation(format!("t_c must be ≥ 0 (got {x})")));
            }
            p.push(PulseSegment {
                kind: SegmentKind::Gate,
                duration: x,
                theta_m: FRAC_PI_2,
                phi_mw: Some(phi_y),
                label: format!("gate(t_c={x:e})"),
            });
        }
        DressedKind::CcdRamsey => {
            check_boundary_rule(cfg)?;
            p.gate(FRAC_PI_2, phi_y)?;
            p.idle(x)?;
            p.gate(FRAC_PI_2, phi_y)?;
        }
        DressedKind::TwoAxis => {
            check_boundary_rule(cfg)?;
            p.gate(FRAC_PI_2, phi_y)?;
            p.gate(FRAC_PI_2, phi_y + x)?;
        }
    }
    p.pad_for_readout()?;
    Ok(p)
}

/// `(x, P(↑))` for each sweep value, read out after the readout pad.
pub fn dressed_sequence_experiment(
    kind: DressedKind,
    cfg: &DriveConfig<f64>,
    values: &[f64],
    spec: &IntegratorSpec<f64>,
) -> Result<Vec<(f64, f64)>> {
    cfg.validate()?;
    values
        .par_iter()
        .map(|&x| {
            let compiled = dressed_program(kind, cfg, x)?.compile()?;
            Ok((x, compiled.spin_up_fraction(spec)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::Scheme;
    use crate::experiments::fit::{fit_cosine, fit_decaying_sinusoid, FitStatus};
    use crate::experiments::linspace;
    use std::f64::consts::TAU;

    fn cm() -> DriveConfig<f64> {
        DriveConfig::new(Scheme::Cmccd).with_rabi(TAU * 2.2e6)
    }

    #[test]
    fn ccd_rabi_closed_form() {
        let c = cm();
        let t = linspace(0.0, 5e-6, 64);
        let out =
            dressed_sequence_experiment(DressedKind::CcdRabi, &c, &t, &IntegratorSpec::rotating_default()).unwrap();
        for (x, p) in out {
            assert!((p - (1.0 - (c.mod_strength * x).cos()) / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn ccd_ramsey_oscillates_at_modulation_strength() {
        let c = cm();
        let t = linspace(0.0, 8e-6, 160);
        let out =
            dressed_sequence_experiment(DressedKind::CcdRamsey, &c, &t, &IntegratorSpec::rotating_default()).unwrap();
        let (x, y): (Vec<f64>, Vec<f64>) = out.into_iter().unzip();
        let fit = fit_decaying_sinusoid(&x, &y).unwrap();
        assert_eq!(fit.status, FitStatus::Unbounded);
        assert!((fit.frequency / (c.mod_strength / TAU) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn two_axis_period() {
        let c = cm();
        let phis = linspace(0.0, 2.0 * TAU, 33);
        let out =
            dressed_sequence_experiment(DressedKind::TwoAxis, &c, &phis, &IntegratorSpec::rotating_default()).unwrap();
        let y: Vec<f64> = out.iter().map(|p| p.1).collect();
        let f = fit_cosine(&phis, &y, TAU).unwrap();
        assert!(f.r_squared > 0.999999);
        assert!((f.amplitude - 0.5).abs() < 1e-6);
    }

    #[test]
    fn boundary_violation_is_an_error() {
        let c = cm().with_mod_ratio(0.3);
        assert!(
            dressed_sequence_experiment(DressedKind::TwoAxis, &c, &[0.0], &IntegratorSpec::rotating_default()).is_err()
        );
        assert!(DressedKind::parse("ccd_ramsey") == Some(DressedKind::CcdRamsey));
    }
}
