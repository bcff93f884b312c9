//! Discrete Fourier spectra over the duration axis and dominant-frequency
//! extraction.

use num_complex::Complex;
use rustfft::FftPlanner;

use super::sweep::{Axis, SweepGrid, SweepMeta};
use super::uniform_spacing;
use crate::error::{CcdError, Result};

/// Spectra of each row of a [`SweepGrid`] over its duration axis.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumGrid {
    /// Frequency axis in Hz, `k·f_s/N` for `k = 0..=N/2`.
    pub x_axis: Axis,
    pub y_axis: Axis,
    /// DFT magnitude per row after mean removal.
    pub values: Vec<Vec<f64>>,
    pub meta: SweepMeta,
}

fn dft_magnitude(samples: &[f64], window: bool) -> Vec<f64> {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = samples
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let w = if window && n > 1 {
                0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / (n - 1) as f64).cos()
            } else {
                1.0
            };
            Complex::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf[..=n / 2].iter().map(|c| c.norm()).collect()
}

pub fn spectrum(grid: &SweepGrid) -> Result<SpectrumGrid> {
    grid.validate()?;
    let dt = uniform_spacing(&grid.x_axis.values)?;
    let n = grid.x_axis.values.len();
    let fs = 1.0 / dt;
    let freqs = (0..=n / 2).map(|k| k as f64 * fs / n as f64).collect();
    let values = grid.values.iter().map(|row| dft_magnitude(row, false)).collect();
    Ok(SpectrumGrid {
        x_axis: Axis::new("frequency", "Hz", freqs),
        y_axis: grid.y_axis.clone(),
        values,
        meta: grid.meta.clone(),
    })
}

/// Frequency (Hz) of the strongest non-DC component of a uniformly sampled
/// series: mean removal, Hann window, then a parabola through the log
/// magnitudes of the peak bin and its neighbours. Ties go to the lower bin.
pub fn dominant_frequency(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() {
        return Err(CcdError::Validation("times and values differ in length".into()));
    }
    if times.len() < 4 {
        return Err(CcdError::Validation("need at least 4 samples for a spectrum".into()));
    }
    let dt = uniform_spacing(times)?;
    let n = times.len();
    let mag = dft_magnitude(values, true);
    let mut peak = 1;
    for k in 2..mag.len() {
        if mag[k] > mag[peak] {
            peak = k;
        }
    }
    let bin = 1.0 / (dt * n as f64);
    if mag[peak] == 0.0 {
        return Err(CcdError::Validation("series is constant; no dominant frequency".into()));
    }
    let mut offset = 0.0;
    if peak + 1 < mag.len() {
        let floor = f64::MIN_POSITIVE;
        let (a, b, c) = (mag[peak - 1].max(floor).ln(), mag[peak].ln(), mag[peak + 1].max(floor).ln());
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            offset = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        }
    }
    Ok((peak as f64 + offset) * bin)
}

/// Width of one DFT bin, `1/(N·Δt)`, for a uniform grid.
pub fn bin_width(times: &[f64]) -> Result<f64> {
    let dt = uniform_spacing(times)?;
    Ok(1.0 / (dt * times.len() as f64))
}
