//! Least-squares fits: exponentially decaying sinusoid (Levenberg–Marquardt)
//! and fixed-period cosine (linear).

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

use crate::drive::DriveConfig;
use crate::error::{CcdError, Result};

/// Decay times beyond `T2_CAP_FACTOR × span` are reported as unbounded.
pub const T2_CAP_FACTOR: f64 = 1e3;

const MAX_ITERATIONS: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub enum FitStatus {
    Converged,
    /// Converged with a decay rate indistinguishable from zero; `decay_time`
    /// holds the cap `T2_CAP_FACTOR × span`, a lower bound.
    Unbounded,
    /// No convergence; parameters are the last iterate and `decay_time` is NaN.
    Failed(String),
}

/// `y = A·exp(−t/T₂)·sin(2πft + φ) + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// s
    pub decay_time: f64,
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
    pub iterations: usize,
    pub status: FitStatus,
}

impl FitResult {
    pub fn converged(&self) -> bool {
        !matches!(self.status, FitStatus::Failed(_))
    }

    /// `Q = T₂/T_π`, when the fit converged.
    pub fn quality_factor(&self, t_pi: f64) -> Option<f64> {
        self.converged().then(|| self.decay_time / t_pi)
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let decay = if self.status == FitStatus::Unbounded { 0.0 } else { t / self.decay_time };
        self.amplitude * (-decay).exp() * (TAU * self.frequency * t + self.phase).sin() + self.offset
    }
}

/// Nominal π-rotation time: `π/Ω₀` for the bare qubit, `π/ε_m` for CCD.
pub fn pi_time(cfg: &DriveConfig<f64>) -> f64 {
    if cfg.is_bare() || cfg.mod_strength <= 0.0 {
        PI / cfg.rabi
    } else {
        PI / cfg.mod_strength
    }
}

type P = SVector<f64, 5>;

/// Parameters on the normalized time `τ = (t − t₀)/span`: `[A, ν, g, φ, c]`.
fn model(p: &P, tau: f64) -> (f64, P) {
    let (a, nu, g, phi) = (p[0], p[1], p[2], p[3]);
    let e = (-g * tau).exp();
    let (s, c) = (TAU * nu * tau + phi).sin_cos();
    let value = a * e * s + p[4];
    let grad = P::from([e * s, a * e * c * TAU * tau, -tau * a * e * s, a * e * c, 1.0]);
    (value, grad)
}

fn cost(p: &P, tau: &[f64], y: &[f64]) -> f64 {
    tau.iter().zip(y).map(|(t, v)| (model(p, *t).0 - v).powi(2)).sum()
}

/// Strongest periodogram line in cycles per span, searched over `[1, n/2]`.
fn periodogram_peak(tau: &[f64], y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let power = |nu: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, v) in tau.iter().zip(y) {
            let (s, c) = (TAU * nu * t).sin_cos();
            re += (v - mean) * c;
            im += (v - mean) * s;
        }
        re * re + im * im
    };
    let top = (y.len() / 2).max(2) as f64;
    let mut best = (1.0, power(1.0));
    let mut nu = 1.0;
    while nu <= top {
        let p = power(nu);
        if p > best.1 {
            best = (nu, p);
        }
        nu += 0.25;
    }
    // golden-section refinement within one coarse step
    let (mut lo, mut hi) = ((best.0 - 0.25).max(0.5), best.0 + 0.25);
    let r = 0.618_033_988_749_895;
    for _ in 0..60 {
        let m1 = hi - r * (hi - lo);
        let m2 = lo + r * (hi - lo);
        if power(m1) >= power(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}

/// Decay rate (per unit τ) from the log-slope of per-period half ranges.
fn envelope_rate(tau: &[f64], y: &[f64], nu: f64) -> f64 {
    let period = 1.0 / nu;
    let mut pts = Vec::new();
    let mut start = 0;
    while start < tau.len() {
        let end_t = tau[start] + period;
        let end = tau[start..].iter().position(|t| *t >= end_t).map_or(tau.len(), |k| start + k);
        if end - start >= 3 && end < tau.len() {
            let seg = &y[start..end];
            let (mn, mx) = seg.iter().fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(*v), b.max(*v)));
            let amp = 0.5 * (mx - mn);
            if amp > 0.0 {
                pts.push((0.5 * (tau[start] + tau[end - 1]), amp.ln()));
            }
        }
        start = end.max(start + 1);
    }
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        0.0
    } else {
        (-sxy / sxx).max(0.0)
    }
}

/// Linear least squares for `a·sin + b·cos + c` with `ν`, `g` fixed.
fn linear_phase_fit(tau: &[f64], y: &[f64], nu: f64, g: f64) -> (f64, f64, f64) {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (t, v) in tau.iter().zip(y) {
        let e = (-g * t).exp();
        let (s, c) = (TAU * nu * t).sin_cos();
        let row = Vector3::new(e * s, e * c, 1.0);
        ata += row * row.transpose();
        aty += row * *v;
    }
    match ata.lu().solve(&aty) {
        Some(x) => (x[0].hypot(x[1]), x[1].atan2(x[0]), x[2]),
        None => (0.0, 0.0, y.iter().sum::<f64>() / y.len() as f64),
    }
}

fn wrap_phase(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Fits `A·e^{−t/T₂}·sin(2πft+φ)+c`. Needs at least 16 points; the fitted
/// frequency must cover at least two periods of the span.
pub fn fit_decaying_sinusoid(t: &[f64], y: &[f64]) -> Result<FitResult> {
    if t.len() != y.len() {
        return Err(CcdError::Fit("times and values differ in length".into()));
    }
    if t.len() < 16 {
        return Err(CcdError::Fit(format!("need at least 16 points (got {})", t.len())));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CcdError::Fit("non-finite input".into()));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CcdError::Fit("times must be strictly increasing".into()));
    }
    let t0 = t[0];
    let span = t[t.len() - 1] - t0;
    let tau: Vec<f64> = t.iter().map(|v| (v - t0) / span).collect();

    let nu0 = periodogram_peak(&tau, y);
    let g0 = envelope_rate(&tau, y, nu0);
    let (a0, phi0, c0) = linear_phase_fit(&tau, y, nu0, g0);
    let mut p = P::from([a0, nu0, g0, phi0, c0]);
    let mut current = cost(&p, &tau, y);
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut jtj = SMatrix::<f64, 5, 5>::zeros();
        let mut jtr = P::zeros();
        for (tt, v) in tau.iter().zip(y) {
            let (m, grad) = model(&p, *tt);
            jtj += grad * grad.transpose();
            jtr += grad * (m - v);
        }
        if current <= 1e-30 * scale || jtr.norm() <= 1e-15 * scale.sqrt() {
            converged = true;
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for k in 0..5 {
                damped[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 4.0;
                continue;
            };
            let mut trial = p + step;
            trial[2] = trial[2].max(0.0);
            let c = cost(&trial, &tau, y);
            if c < current {
                let improvement = (current - c) / current.max(f64::MIN_POSITIVE);
                let small_step = step.norm() <= 1e-12 * (p.norm() + 1e-12);
                p = trial;
                current = c;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if improvement < 1e-14 || small_step {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // no downhill step at any damping: a stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }

    let (mut amp, mut phi) = (p[0], p[3]);
    if amp < 0.0 {
        amp = -amp;
        phi += PI;
    }
    let frequency = p[1] / span;
    let rate = p[2] / span;
    amp *= (rate * t0).exp();
    phi = wrap_phase(phi - TAU * frequency * t0);
    let residual_rms = (current / t.len() as f64).sqrt();
    let cap = T2_CAP_FACTOR * span;
    let (decay_time, status) = if !converged {
        (f64::NAN, FitStatus::Failed(format!("no convergence after {iterations} iterations")))
    } else if p[1] < 2.0 {
        (f64::NAN, FitStatus::Failed(format!("fitted signal spans {:.3} periods; need at least 2", p[1])))
    } else if rate * cap <= 1.0 {
        (cap, FitStatus::Unbounded)
    } else {
        (1.0 / rate, FitStatus::Converged)
    };
    Ok(FitResult { amplitude: amp, frequency, decay_time, phase: phi, offset: p[4], residual_rms, iterations, status })
}

/// `y = A·cos(2πx/period + φ) + c`, fitted linearly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub r_squared: f64,
}

pub fn fit_cosine(x: &[f64], y: &[f64], period: f64) -> Result<CosineFit> {
    if x.len() != y.len() || x.len() < 4 {
        return Err(CcdError::Fit("need at least 4 matching (x, y) points".into()));
    }
    let k = TAU / period;
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (xv, yv) in x.iter().zip(y) {
        let (s, c) = (k * xv).sin_cos();
        let row = Vector3::new(c, s, 1.0);
        ata += row * row.transpose();
        aty += row * *yv;
    }
    let sol = ata.lu().solve(&aty).ok_or_else(|| CcdError::Fit("singular cosine design matrix".into()))?;
    let (a, b, c) = (sol[0], sol[1], sol[2]);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(xv, yv)| {
            let (s, cs) = (k * xv).sin_cos();
            (a * cs + b * s + c - yv).powi(2)
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    // a·cos + b·sin = A·cos(x + φ) with A cos φ = a, A sin φ = −b
    Ok(CosineFit { amplitude: a.hypot(b), phase: (-b).atan2(a), offset: c, r_squared })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::linspace;

    fn synth(t: &[f64], a: f64, f: f64, t2: f64, phi: f64, c: f64) -> Vec<f64> {
        t.iter().map(|t| a * (-t / t2).exp() * (TAU * f * t + phi).sin() + c).collect()
    }

    #[test]
    fn recovers_synthetic_parameters() {
        let t = linspace(0.0, 3e-5, 600);
        let y = synth(&t, 1.0, 1e6, 1e-5, 0.3, 0.5);
        let r = fit_decaying_sinusoid(&t, &y).unwrap();
        assert_eq!(r.status, FitStatus::Converged);
        assert!((r.amplitude - 1.0).abs() < 1e-3);
        assert!((r.frequency / 1e6 - 1.0).abs() < 1e-3);
        assert!((r.decay_time / 1e-5 - 1.0).abs() < 1e-3);
        assert!((r.phase - 0.3).abs() < 1e-3);
        assert!((r.offset - 0.5).abs() < 1e-3);
        assert!(r.residual_rms < 1e-9);
    }

    #[test]
    fn rabi_like_cosine_with_offset_time() {
        let t: Vec<f64> = linspace(2e-6, 1.2e-5, 257);
        let y: Vec<f64> = t.iter().map(|t| 0.5 - 0.5 * (-t / 4e-6f64).exp() * (TAU * 2.2e6 * t).cos()).collect();
        let r = fit_decaying_sinusoid(&t, &y).unwrap();
        assert!((r.frequency / 2.2e6 - 1.0).abs() < 1e-6);
        assert!((r.decay_time / 4e-6 - 1.0).abs() < 1e-6);
        assert!((r.evaluate(5e-6) - y[t.iter().position(|v| *v >= 5e-6).unwrap()]).abs() < 1e-2);
    }

    #[test]
    fn undamped_input_is_flagged() {
        let t = linspace(0.0, 1e-5, 400);
        let y = synth(&t, 0.5, 0.9e6, f64::INFINITY, -1.0, 0.5);
        let r = fit_decaying_sinusoid(&t, &y).unwrap();
        assert_eq!(r.status, FitStatus::Unbounded);
        assert!(r.decay_time >= T2_CAP_FACTOR * 1e-5);
        assert!((r.frequency / 0.9e6 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fit_preconditions() {
        assert!(fit_decaying_sinusoid(&[0.0; 4], &[0.0; 4]).is_err());
        let t = linspace(0.0, 1.0, 64);
        let y: Vec<f64> = t.iter().map(|t| (TAU * 0.5 * t).sin()).collect();
        let r = fit_decaying_sinusoid(&t, &y).unwrap();
        assert!(!r.converged());
        assert!(r.decay_time.is_nan());
        assert!(r.quality_factor(1.0).is_none());
    }

    #[test]
    fn cosine_fit() {
        let x = linspace(0.0, 4.0 * PI, 41);
        let y: Vec<f64> = x.iter().map(|v| 0.5 + 0.5 * (v + 0.2).cos()).collect();
        let f = fit_cosine(&x, &y, TAU).unwrap();
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!((f.amplitude - 0.5).abs() < 1e-12);
        assert!((f.phase - 0.2).abs() < 1e-12);
        assert!((f.offset - 0.5).abs() < 1e-12);
    }
}
