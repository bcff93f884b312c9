//! Experiment procedures: sweeps, spectra, trajectories, gate infidelity,
//! dressed-qubit sequences, quasi-static noise averaging, decaying-sinusoid
//! fits and randomized benchmarking. Double precision throughout.
//!
//! Independent work items (grid columns, noise shots, RB randomizations) run
//! on the ambient rayon pool and are always reduced in grid order, so results
//! do not depend on the number of workers.

pub mod dressed;
pub mod fit;
pub mod infidelity;
pub mod noise;
pub mod rb;
pub mod spectrum;
pub mod sweep;
pub mod trajectory;

pub use dressed::{dressed_sequence_experiment, DressedKind};
pub use fit::{fit_cosine, fit_decaying_sinusoid, CosineFit, FitResult, FitStatus};
pub use infidelity::{infidelity_curve, y_pi_infidelity, ErrorAxis};
pub use noise::{noise_average, NoiseSpec, ShotErrors};
pub use rb::{randomized_benchmarking, RbMode, RbOptions, RbResult};
pub use spectrum::{dominant_frequency, spectrum, SpectrumGrid};
pub use sweep::{chevron_sweep, coarse_grid, rabi_error_sweep, Axis, ReadoutFrame, SweepGrid, SweepMeta, SweepOptions};
pub use trajectory::{bloch_trajectory, TrajectoryRecord};

use crate::error::{CcdError, Result};

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|k| if k == n - 1 { stop } else { start + step * k as f64 }).collect()
        }
    }
}

pub(crate) fn check_ascending(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(CcdError::Validation(format!("{name} grid is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CcdError::Validation(format!("{name} grid contains non-finite values")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CcdError::Validation(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

/// Sample spacing of a uniform grid, or an error naming the first irregular gap.
pub(crate) fn uniform_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(CcdError::Validation("need at least two samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(CcdError::Validation("time grid must be increasing".into()));
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(CcdError::Validation(format!(
                "time grid is not uniform: gap {k} is {:e} s, expected {dt:e} s",
                w[1] - w[0]
            )));
        }
    }
    Ok(dt)
}
