//! Quasi-static noise: static (δ, Δ_Ω) drawn per shot from independent
//! zero-mean Gaussians, constant within a shot.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{CcdError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation of the detuning, rad/s.
    pub sigma_detuning: f64,
    /// Standard deviation of `Δ_Ω/Ω₀`.
    pub sigma_rabi_frac: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { sigma_detuning: 0.0, sigma_rabi_frac: 0.0, samples: 1, seed: 0 }
    }
}

/// Errors applied during one shot.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ShotErrors {
    /// rad/s
    pub detuning: f64,
    pub rabi_error_frac: f64,
}

impl NoiseSpec {
    pub fn new(sigma_detuning: f64, sigma_rabi_frac: f64, samples: usize, seed: u64) -> Self {
        Self { sigma_detuning, sigma_rabi_frac, samples, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_detuning >= 0.0 && self.sigma_detuning.is_finite()) {
            return Err(CcdError::Validation("sigma_detuning must be finite and ≥ 0".into()));
        }
        if !(self.sigma_rabi_frac >= 0.0 && self.sigma_rabi_frac.is_finite()) {
            return Err(CcdError::Validation("sigma_rabi_frac must be finite and ≥ 0".into()));
        }
        if self.samples == 0 {
            return Err(CcdError::Validation("noise samples must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma_detuning == 0.0 && self.sigma_rabi_frac == 0.0
    }

    /// Errors of shot `index` in stream `stream`; the same arguments always
    /// give the same draw, whatever order shots are evaluated in.
    pub fn draw(&self, stream: u64, index: u64) -> ShotErrors {
        if self.is_noiseless() {
            return ShotErrors::default();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        rng.set_stream(index);
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let a: f64 = std.sample(&mut rng);
        let b: f64 = std.sample(&mut rng);
        ShotErrors { detuning: a * self.sigma_detuning, rabi_error_frac: b * self.sigma_rabi_frac }
    }
}

/// Mean of `experiment` over `noise.samples` shots. With zero sigmas a single
/// noiseless evaluation is returned.
pub fn noise_average<F>(noise: &NoiseSpec, experiment: F) -> Result<Vec<f64>>
where
    F: Fn(ShotErrors) -> Result<Vec<f64>> + Sync,
{
    noise_average_stream(noise, 0, experiment)
}

/// As [`noise_average`] with draws taken from an explicit stream.
pub fn noise_average_stream<F>(noise: &NoiseSpec, stream: u64, experiment: F) -> Result<Vec<f64>>
where
    F: Fn(ShotErrors) -> Result<Vec<f64>> + Sync,
{
    noise.validate()?;
    if noise.is_noiseless() {
        return experiment(ShotErrors::default());
    }
    let shots = (0..noise.samples as u64)
        .into_par_iter()
        .map(|k| experiment(noise.draw(stream, k)))
        .collect::<Result<Vec<_>>>()?;
    let len = shots[0].len();
    if shots.iter().any(|s| s.len() != len) {
        return Err(CcdError::Consistency("noise shots returned different lengths".into()));
    }
    let mut mean = vec![0.0; len];
    for s in &shots {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    let n = shots.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_noiseless() {
        let n = NoiseSpec::new(0.0, 0.0, 50, 3);
        let out = noise_average(&n, |e| Ok(vec![e.detuning, 1.0])).unwrap();
        assert_eq!(out, vec![0.0, 1.0]);
    }

    #[test]
    fn draws_are_reproducible_and_order_free() {
        let n = NoiseSpec::new(1e6, 0.05, 200, 42);
        let a = noise_average(&n, |e| Ok(vec![e.detuning, e.rabi_error_frac])).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| noise_average(&n, |e| Ok(vec![e.detuning, e.rabi_error_frac])).unwrap());
        assert_eq!(a, b);
        assert_eq!(n.draw(0, 7), n.draw(0, 7));
        assert_ne!(n.draw(0, 7), n.draw(0, 8));
        assert_ne!(n.draw(0, 7), n.draw(1, 7));
    }

    #[test]
    fn draws_have_requested_moments() {
        let n = NoiseSpec::new(2.0, 0.5, 20000, 9);
        let m2 = noise_average(&n, |e| Ok(vec![e.detuning.powi(2), e.rabi_error_frac.powi(2), e.detuning])).unwrap();
        assert!((m2[0] / 4.0 - 1.0).abs() < 0.05);
        assert!((m2[1] / 0.25 - 1.0).abs() < 0.05);
        assert!(m2[2].abs() < 0.05);
    }

    #[test]
    fn validation() {
        assert!(NoiseSpec::new(-1.0, 0.0, 1, 0).validate().is_err());
        assert!(NoiseSpec::new(0.0, 0.0, 0, 0).validate().is_err());
    }
}
