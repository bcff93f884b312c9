//! Bloch-sphere trajectories under continuous driving, with markers at each
//! nominal π/2 of rotation.

use std::f64::consts::FRAC_PI_2;

use crate::drive::{DriveConfig, Frame};
use crate::error::{CcdError, Result};
use crate::propagator::{evolve_sampled, FrameView, IntegratorSpec};
use crate::qubit::{bloch_vector, BlochVector, QubitState};

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub frame: Frame,
    pub samples: Vec<(f64, BlochVector<f64>)>,
    /// Bloch vector after each accumulated π/2 of nominal rotation.
    pub markers: Vec<BlochVector<f64>>,
    /// Largest pairwise marker distance within any nominal-state class.
    pub spread: f64,
}

/// Markers `m` and `m'` share a nominal state when `m ≡ m' (mod 4)`.
pub fn marker_spread(markers: &[BlochVector<f64>]) -> f64 {
    let mut spread = 0.0f64;
    for class in 0..4 {
        let members: Vec<&BlochVector<f64>> = markers.iter().skip(class).step_by(4).collect();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                spread = spread.max(a.distance(b));
            }
        }
    }
    spread
}

/// Trajectory from |0⟩ over `total_angle` of nominal rotation. CCD schemes are
/// followed in the second frame at rate ε_m, the bare qubit in the first frame
/// at rate Ω₀.
pub fn bloch_trajectory(
    cfg: &DriveConfig<f64>,
    total_angle: f64,
    samples_per_pi2: usize,
    spec: &IntegratorSpec<f64>,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let quarters = total_angle / FRAC_PI_2;
    if !(total_angle > 0.0) || (quarters - quarters.round()).abs() > 1e-9 * quarters.max(1.0) {
        return Err(CcdError::Validation(format!(
            "total angle must be a positive multiple of π/2 (got {total_angle})"
        )));
    }
    if samples_per_pi2 == 0 {
        return Err(CcdError::Validation("samples_per_pi2 must be ≥ 1".into()));
    }
    let n_markers = quarters.round() as usize;
    let (frame, rate) = if cfg.is_bare() {
        (Frame::First, cfg.rabi)
    } else {
        if !(cfg.mod_strength > 0.0) {
            return Err(CcdError::InvalidDrive("CCD trajectory needs ε_m > 0".into()));
        }
        (Frame::Second, cfg.mod_strength)
    };
    let quarter_time = FRAC_PI_2 / rate;
    let total = n_markers * samples_per_pi2;
    let times: Vec<f64> = (1..=total).map(|k| quarter_time * (k as f64 / samples_per_pi2 as f64)).collect();
    let view = FrameView::new(cfg, frame)?;
    let psi0 = QubitState::ground();
    let states = evolve_sampled(&view, &psi0, 0.0, &times, spec)?;
    let mut samples = Vec::with_capacity(total + 1);
    samples.push((0.0, bloch_vector(&psi0)?));
    for (t, s) in times.iter().zip(&states) {
        samples.push((*t, bloch_vector(s)?));
    }
    let markers: Vec<BlochVector<f64>> =
        samples.iter().skip(samples_per_pi2).step_by(samples_per_pi2).map(|(_, b)| *b).collect();
    debug_assert_eq!(markers.len(), n_markers);
    let spread = marker_spread(&markers);
    Ok(TrajectoryRecord { frame, samples, markers, spread })
}
