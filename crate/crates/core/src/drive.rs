//! Time-dependent Hamiltonians of the modulated drive in the lab frame and
//! in the two rotating frames, the frame unitaries connecting them, and the
//! baseband I/Q envelopes that synthesize the lab drive.
//!
//! Conventions: ħ = 1, every frequency is an angular frequency in rad/s and
//! every modulation argument `Ω₀t − θ_m` uses global sequence time.
//!
//! State relations between the views:
//! `ψ_lab(t) = first_frame_unitary(t) · ψ₁(t)` and
//! `ψ₁(t) = second_frame_unitary(t) · ψ₂(t)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{CcdError, Result};
use crate::qubit::{Hamiltonian, Operator, UnitaryOp};
use crate::scalar::Real;

/// Modulation scheme, i.e. the `(α_A, α_P)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Unmodulated Rabi drive, `(0, 0)`.
    Bare,
    /// Amplitude modulation, `(1, 0)`.
    Amccd,
    /// Phase modulation, `(0, 1)`.
    Pmccd,
    /// Equal amplitude and phase modulation, `(½, ½)`.
    Cmccd,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Bare, Scheme::Amccd, Scheme::Pmccd, Scheme::Cmccd];
    pub const CCD: [Scheme; 3] = [Scheme::Amccd, Scheme::Pmccd, Scheme::Cmccd];

    /// `(α_A, α_P)`.
    pub fn alphas<T: Real>(self) -> (T, T) {
        let (a, p) = match self {
            Scheme::Bare => (0.0, 0.0),
            Scheme::Amccd => (1.0, 0.0),
            Scheme::Pmccd => (0.0, 1.0),
            Scheme::Cmccd => (0.5, 0.5),
        };
        (T::lit(a), T::lit(p))
    }

    /// Inverse of [`Scheme::alphas`] for the four named points.
    pub fn from_alphas<T: Real>(alpha_a: T, alpha_p: T) -> Option<Self> {
        Self::ALL.into_iter().find(|s| {
            let (a, p) = s.alphas::<T>();
            a == alpha_a && p == alpha_p
        })
    }

    pub fn is_ccd(self) -> bool {
        self != Scheme::Bare
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Scheme::Bare => "bare",
            Scheme::Amccd => "am",
            Scheme::Pmccd => "pm",
            Scheme::Cmccd => "cm",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Scheme {
    type Err = CcdError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bare" => Ok(Scheme::Bare),
            "am" | "amccd" => Ok(Scheme::Amccd),
            "pm" | "pmccd" => Ok(Scheme::Pmccd),
            "cm" | "cmccd" => Ok(Scheme::Cmccd),
            other => Err(CcdError::Validation(format!("unknown scheme `{other}` (expected bare, am, pm or cm)"))),
        }
    }
}

/// Which Hamiltonian view a propagation runs in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Frame {
    Lab,
    First,
    Second,
}

/// Physical drive and modulation parameters. All frequencies in rad/s,
/// phases in radians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveConfig<T> {
    /// Qubit Larmor frequency ω_L.
    pub omega_l: T,
    /// Carrier frequency ω_mw.
    pub omega_mw: T,
    /// Nominal Rabi frequency Ω₀ (> 0).
    pub rabi: T,
    /// Static Rabi error Δ_Ω.
    pub rabi_error: T,
    /// Modulation strength ε_m (≥ 0).
    pub mod_strength: T,
    /// Modulation phase θ_m.
    pub mod_phase: T,
    /// Carrier phase φ_mw.
    pub mw_phase: T,
    pub alpha_a: T,
    pub alpha_p: T,
}

impl<T: Real> DriveConfig<T> {
    /// Defaults used throughout: Ω₀ = 2π·3.6 MHz, ε_m = Ω₀/4, θ_m = π/2,
    /// φ_mw = 0, ω_L = ω_mw = 2π·15 GHz, no Rabi error.
    pub fn new(scheme: Scheme) -> Self {
        let two_pi = T::TAU();
        let rabi = two_pi * T::lit(3.6e6);
        let carrier = two_pi * T::lit(15e9);
        let (alpha_a, alpha_p) = scheme.alphas();
        Self {
            omega_l: carrier,
            omega_mw: carrier,
            rabi,
            rabi_error: T::zero(),
            mod_strength: rabi / T::lit(4.0),
            mod_phase: T::FRAC_PI_2(),
            mw_phase: T::zero(),
            alpha_a,
            alpha_p,
        }
    }

    /// Sets Ω₀ and rescales ε_m to keep the ratio ε_m/Ω₀ fixed.
    pub fn with_rabi(mut self, rabi: T) -> Self {
        let ratio = self.mod_ratio();
        self.rabi = rabi;
        self.mod_strength = ratio * rabi;
        self
    }

    /// Sets ε_m = ratio·Ω₀.
    pub fn with_mod_ratio(mut self, ratio: T) -> Self {
        self.mod_strength = ratio * self.rabi;
        self
    }

    pub fn with_mod_strength(mut self, eps: T) -> Self {
        self.mod_strength = eps;
        self
    }

    /// Sets the detuning δ = ω_L − ω_mw by moving ω_L.
    pub fn with_detuning(mut self, delta: T) -> Self {
        self.omega_l = self.omega_mw + delta;
        self
    }

    /// Sets the carrier and keeps the detuning.
    pub fn with_carrier(mut self, omega_mw: T) -> Self {
        let d = self.detuning();
        self.omega_mw = omega_mw;
        self.omega_l = omega_mw + d;
        self
    }

    pub fn with_rabi_error(mut self, rabi_error: T) -> Self {
        self.rabi_error = rabi_error;
        self
    }

    pub fn with_mod_phase(mut self, theta_m: T) -> Self {
        self.mod_phase = theta_m;
        self
    }

    pub fn with_mw_phase(mut self, phi_mw: T) -> Self {
        self.mw_phase = phi_mw;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        let (a, p) = scheme.alphas();
        self.alpha_a = a;
        self.alpha_p = p;
        self
    }

    pub fn with_alphas(mut self, alpha_a: T, alpha_p: T) -> Self {
        self.alpha_a = alpha_a;
        self.alpha_p = alpha_p;
        self
    }

    /// δ = ω_L − ω_mw.
    #[inline]
    pub fn detuning(&self) -> T {
        self.omega_l - self.omega_mw
    }

    pub fn mod_ratio(&self) -> T {
        self.mod_strength / self.rabi
    }

    /// The named scheme matching the α pair, if any.
    pub fn scheme(&self) -> Option<Scheme> {
        Scheme::from_alphas(self.alpha_a, self.alpha_p)
    }

    pub fn is_bare(&self) -> bool {
        self.alpha_a == T::zero() && self.alpha_p == T::zero()
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_L", self.omega_l),
            ("omega_mw", self.omega_mw),
            ("rabi", self.rabi),
            ("rabi_error", self.rabi_error),
            ("mod_strength", self.mod_strength),
            ("mod_phase", self.mod_phase),
            ("mw_phase", self.mw_phase),
            ("alpha_A", self.alpha_a),
            ("alpha_P", self.alpha_p),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(CcdError::InvalidDrive(format!("{name} is not finite")));
            }
        }
        if !(self.rabi > T::zero()) {
            return Err(CcdError::InvalidDrive(format!(
                "Rabi frequency must be positive (got {}); rotating-frame terms divide by Ω₀",
                self.rabi
            )));
        }
        if self.mod_strength < T::zero() {
            return Err(CcdError::InvalidDrive("modulation strength must be ≥ 0".into()));
        }
        if self.alpha_a < T::zero() || self.alpha_p < T::zero() {
            return Err(CcdError::InvalidDrive("alpha_A and alpha_P must be ≥ 0".into()));
        }
        let sum = self.alpha_a + self.alpha_p;
        let tol = T::lit(1e-12);
        if !(self.is_bare() || (sum - T::one()).abs() <= tol) {
            return Err(CcdError::InvalidDrive(format!(
                "alpha_A + alpha_P must equal 1 (or both be 0 for the bare drive), got {} + {} = {}",
                self.alpha_a, self.alpha_p, sum
            )));
        }
        Ok(())
    }

    #[inline]
    fn amp_factor(&self) -> T {
        T::one() + self.rabi_error / self.rabi
    }

    /// Phase-modulation excursion `(2α_Pε_m/Ω₀)·[sin(Ω₀t − θ_m) + sin θ_m]`,
    /// accumulated from `t = 0` like the first-frame phase, so that the
    /// first-frame drive axis is exactly `φ_mw`.
    #[inline]
    fn phase_excursion(&self, t: T) -> T {
        T::lit(2.0) * self.alpha_p * self.mod_strength / self.rabi
            * ((self.rabi * t - self.mod_phase).sin() + self.mod_phase.sin())
    }

    /// The σ_x coefficient of the lab Hamiltonian,
    /// `(Ω₀+Δ_Ω)[cos ψ + (2α_Aε_m/Ω₀) sin(Ω₀t−θ_m) sin ψ]` with
    /// `ψ = ω_mw t + φ_mw − (2α_Pε_m/Ω₀)[sin(Ω₀t−θ_m) + sin θ_m]`.
    pub fn lab_drive_coefficient(&self, t: T) -> T {
        let s = (self.rabi * t - self.mod_phase).sin();
        let psi = self.omega_mw * t + self.mw_phase - self.phase_excursion(t);
        let am = T::lit(2.0) * self.alpha_a * self.mod_strength / self.rabi;
        (self.rabi + self.rabi_error) * (psi.cos() + am * s * psi.sin())
    }

    /// Lab-frame Hamiltonian `(ω_L/2)σ_z + Ω(t)σ_x`.
    #[inline]
    pub fn lab_hamiltonian(&self, t: T) -> Hamiltonian<T> {
        Hamiltonian::new(self.lab_drive_coefficient(t), T::zero(), self.omega_l / T::lit(2.0))
    }

    /// Modulation part of the first-frame Hamiltonian:
    /// `−(1+Δ_Ω/Ω₀)α_Aε_m sin(Ω₀t−θ_m) σ_{φ+π/2} + α_Pε_m cos(Ω₀t−θ_m) σ_z`.
    #[inline]
    pub fn first_frame_modulation(&self, t: T) -> Hamiltonian<T> {
        let arg = self.rabi * t - self.mod_phase;
        let a = -self.amp_factor() * self.alpha_a * self.mod_strength * arg.sin();
        let p = self.alpha_p * self.mod_strength * arg.cos();
        Hamiltonian::axis(self.mw_phase + T::FRAC_PI_2(), a) + Hamiltonian::sigma_z(p)
    }

    /// First rotating frame Hamiltonian (carrier removed, first RWA applied).
    #[inline]
    pub fn first_frame_hamiltonian(&self, t: T) -> Hamiltonian<T> {
        let two = T::lit(2.0);
        Hamiltonian::sigma_z(self.detuning() / two)
            + Hamiltonian::axis(self.mw_phase, (self.rabi + self.rabi_error) / two)
            + self.first_frame_modulation(t)
    }

    /// Static Rabi error and rotating detuning terms of the second frame.
    pub fn second_frame_error_terms(&self, t: T) -> Hamiltonian<T> {
        let two = T::lit(2.0);
        let w = self.rabi * t;
        let half_d = self.detuning() / two;
        Hamiltonian::axis(self.mw_phase, self.rabi_error / two)
            + Hamiltonian::sigma_z(half_d * w.cos())
            + Hamiltonian::axis(self.mw_phase + T::FRAC_PI_2(), half_d * w.sin())
    }

    /// Coefficient of the static co-rotating term,
    /// `[α_P + (1+Δ_Ω/Ω₀)α_A]·ε_m/2`.
    pub fn co_rotating_coefficient(&self) -> T {
        (self.alpha_p + self.amp_factor() * self.alpha_a) * self.mod_strength / T::lit(2.0)
    }

    /// Coefficient of the 2Ω₀ counter-rotating term,
    /// `[α_P − (1+Δ_Ω/Ω₀)α_A]·ε_m/2`.
    pub fn counter_rotating_coefficient(&self) -> T {
        (self.alpha_p - self.amp_factor() * self.alpha_a) * self.mod_strength / T::lit(2.0)
    }

    /// Co-rotating term: a static field along `cos θ_m σ_z + sin θ_m σ_{φ+π/2}`.
    pub fn second_frame_co_rotating(&self) -> Hamiltonian<T> {
        let c = self.co_rotating_coefficient();
        Hamiltonian::sigma_z(c * self.mod_phase.cos())
            + Hamiltonian::axis(self.mw_phase + T::FRAC_PI_2(), c * self.mod_phase.sin())
    }

    /// Counter-rotating term, oscillating at 2Ω₀.
    pub fn second_frame_counter_rotating(&self, t: T) -> Hamiltonian<T> {
        let c = self.counter_rotating_coefficient();
        let arg = T::lit(2.0) * self.rabi * t - self.mod_phase;
        Hamiltonian::sigma_z(c * arg.cos()) + Hamiltonian::axis(self.mw_phase + T::FRAC_PI_2(), c * arg.sin())
    }

    /// Second rotating frame Hamiltonian: error terms + co-rotating + counter-rotating.
    /// This is an exact transform of [`Self::first_frame_hamiltonian`].
    #[inline]
    pub fn second_frame_hamiltonian(&self, t: T) -> Hamiltonian<T> {
        self.second_frame_error_terms(t) + self.second_frame_co_rotating() + self.second_frame_counter_rotating(t)
    }

    /// Accumulated first-frame phase
    /// `Φ(t) = ω_mw t/2 − (α_Pε_m/Ω₀)[sin(Ω₀t−θ_m) + sin θ_m]`.
    pub fn first_frame_phase(&self, t: T) -> T {
        let k = self.alpha_p * self.mod_strength / self.rabi;
        self.omega_mw * t / T::lit(2.0) - k * ((self.rabi * t - self.mod_phase).sin() + self.mod_phase.sin())
    }

    /// `exp(−iΦ(t)σ_z)`, mapping first-frame states to lab states.
    pub fn first_frame_unitary(&self, t: T) -> UnitaryOp<T> {
        Hamiltonian::sigma_z(T::one()).exp_step(self.first_frame_phase(t))
    }

    /// `exp(−i(Ω₀t/2)σ_{φ_mw})`, mapping second-frame states to first-frame states.
    pub fn second_frame_unitary(&self, t: T) -> UnitaryOp<T> {
        Hamiltonian::axis(self.mw_phase, T::one()).exp_step(self.rabi * t / T::lit(2.0))
    }

    /// Baseband envelopes `(I, Q)` with
    /// `I·cos(ω_mw t+φ_mw) − Q·sin(ω_mw t+φ_mw)` equal to the lab drive coefficient.
    pub fn iq_baseband(&self, t: T) -> IqSample<T> {
        let amp = self.rabi + self.rabi_error;
        let p = self.phase_excursion(t);
        let am = T::lit(2.0) * self.alpha_a * self.mod_strength / self.rabi * (self.rabi * t - self.mod_phase).sin();
        let (sp, cp) = p.sin_cos();
        IqSample { t, i: amp * (cp - am * sp), q: -amp * (sp + am * cp) }
    }

    /// Angular frequency of the fastest dynamics in a given view, used to size
    /// integration steps: the largest of the drive, modulation and detuning
    /// rates and of the precession rate bound `2‖H‖`.
    pub fn fastest_frequency(&self, frame: Frame) -> T {
        let two = T::lit(2.0);
        let d = self.detuning().abs();
        let drive = (self.rabi + self.rabi_error).abs();
        let mod_bound = self.mod_strength * (self.alpha_a * self.amp_factor().abs() + self.alpha_p);
        let mut f = self.rabi.max(d).max(self.mod_strength).max(self.rabi_error.abs());
        match frame {
            Frame::Lab => {
                f = f.max(self.omega_mw.abs()).max(self.omega_l.abs());
                f = f.max(self.omega_l.abs() + two * drive);
            }
            Frame::First => {
                f = f.max(d + drive + two * mod_bound);
            }
            Frame::Second => {
                f = f.max(two * self.rabi);
                f = f.max(d + self.rabi_error.abs() + two * mod_bound);
            }
        }
        f
    }
}

impl<T: Real> Default for DriveConfig<T> {
    fn default() -> Self {
        Self::new(Scheme::Cmccd)
    }
}

/// One baseband sample of the I/Q envelope at time `t` (rad/s amplitude units).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IqSample<T> {
    pub t: T,
    pub i: T,
    pub q: T,
}

impl<T: Real> IqSample<T> {
    /// Upconverts onto the carrier: `I cos(ω_mw t + φ_mw) − Q sin(ω_mw t + φ_mw)`.
    pub fn reconstruct(&self, omega_mw: T, phi_mw: T) -> T {
        let (s, c) = (omega_mw * self.t + phi_mw).sin_cos();
        self.i * c - self.q * s
    }
}

pub fn lab_hamiltonian<T: Real>(cfg: &DriveConfig<T>, t: T) -> Result<Hamiltonian<T>> {
    cfg.validate()?;
    Ok(cfg.lab_hamiltonian(t))
}

pub fn first_frame_hamiltonian<T: Real>(cfg: &DriveConfig<T>, t: T) -> Result<Hamiltonian<T>> {
    cfg.validate()?;
    Ok(cfg.first_frame_hamiltonian(t))
}

pub fn second_frame_hamiltonian<T: Real>(cfg: &DriveConfig<T>, t: T) -> Result<Hamiltonian<T>> {
    cfg.validate()?;
    Ok(cfg.second_frame_hamiltonian(t))
}

pub fn first_frame_unitary<T: Real>(cfg: &DriveConfig<T>, t: T) -> Result<UnitaryOp<T>> {
    cfg.validate()?;
    Ok(cfg.first_frame_unitary(t))
}

pub fn second_frame_unitary<T: Real>(cfg: &DriveConfig<T>, t: T) -> Result<UnitaryOp<T>> {
    cfg.validate()?;
    Ok(cfg.second_frame_unitary(t))
}

pub fn counter_rotating_coefficient<T: Real>(cfg: &DriveConfig<T>) -> Result<T> {
    cfg.validate()?;
    Ok(cfg.counter_rotating_coefficient())
}

pub fn iq_baseband<T: Real>(cfg: &DriveConfig<T>, t: T) -> Result<IqSample<T>> {
    cfg.validate()?;
    Ok(cfg.iq_baseband(t))
}

/// Hermitian matrix form of a Hamiltonian view, for callers that want the
/// operator rather than the Pauli vector.
pub fn hamiltonian_matrix<T: Real>(cfg: &DriveConfig<T>, frame: Frame, t: T) -> Result<Operator<T>> {
    cfg.validate()?;
    let h = match frame {
        Frame::Lab => cfg.lab_hamiltonian(t),
        Frame::First => cfg.first_frame_hamiltonian(t),
        Frame::Second => cfg.second_frame_hamiltonian(t),
    };
    Ok(h.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn preset_cfg(s: Scheme) -> DriveConfig<f64> {
        DriveConfig::new(s)
    }

    #[test]
    fn scheme_alpha_mapping() {
        assert_eq!(Scheme::Bare.alphas::<f64>(), (0.0, 0.0));
        assert_eq!(Scheme::Amccd.alphas::<f64>(), (1.0, 0.0));
        assert_eq!(Scheme::Pmccd.alphas::<f64>(), (0.0, 1.0));
        assert_eq!(Scheme::Cmccd.alphas::<f64>(), (0.5, 0.5));
        for s in Scheme::ALL {
            let (a, p) = s.alphas::<f64>();
            assert_eq!(Scheme::from_alphas(a, p), Some(s));
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let ok = preset_cfg(Scheme::Cmccd);
        assert!(ok.validate().is_ok());
        assert!(ok.with_alphas(0.7, 0.7).validate().is_err());
        assert!(ok.with_alphas(-0.5, 1.5).validate().is_err());
        let mut z = ok;
        z.rabi = 0.0;
        assert!(matches!(first_frame_hamiltonian(&z, 0.0), Err(CcdError::InvalidDrive(_))));
        assert!(first_frame_unitary(&z, 1e-7).is_err());
        assert!(ok.with_mod_strength(-1.0).validate().is_err());
        assert!(ok.with_alphas(0.3, 0.7).validate().is_ok());
    }

    #[test]
    fn lab_hamiltonian_at_origin_without_modulation() {
        let cfg = preset_cfg(Scheme::Cmccd).with_mod_strength(0.0);
        let h = lab_hamiltonian(&cfg, 0.0).unwrap();
        assert_eq!(h, Hamiltonian::new(cfg.rabi, 0.0, cfg.omega_l / 2.0));
    }

    #[test]
    fn bare_lab_drive_is_plain_cosine() {
        let cfg = preset_cfg(Scheme::Bare).with_mw_phase(0.4);
        for k in 0..50 {
            let t = k as f64 * 3.7e-9;
            let expect = cfg.rabi * (cfg.omega_mw * t + 0.4).cos();
            assert_abs_diff_eq!(cfg.lab_drive_coefficient(t), expect, epsilon = 1e-6 * cfg.rabi);
        }
    }

    /// Direct evaluation of the lab drive formula written out independently.
    fn lab_coefficient_oracle(c: &DriveConfig<f64>, t: f64) -> f64 {
        let m = (c.rabi * t - c.mod_phase).sin();
        let phase = c.omega_mw * t + c.mw_phase - 2.0 * c.alpha_p * c.mod_strength / c.rabi * (m + c.mod_phase.sin());
        (c.rabi + c.rabi_error) * (phase.cos() + 2.0 * c.alpha_a * c.mod_strength / c.rabi * m * phase.sin())
    }

    #[test]
    fn cmccd_lab_hamiltonian_at_50ns() {
        let cfg = preset_cfg(Scheme::Cmccd);
        let t = 50e-9;
        let h = cfg.lab_hamiltonian(t);
        // frozen from the independent oracle above
        let expect_x = lab_coefficient_oracle(&cfg, t);
        assert_abs_diff_eq!(h.x, expect_x, epsilon = 1e-9 * cfg.rabi);
        assert_eq!(h.y, 0.0);
        assert_eq!(h.z, cfg.omega_l / 2.0);
        // Ω₀t = 2π·0.18 rad, θ = π/2: sin(Ω₀t−θ) = −cos(0.36π); ω_mw t = 2π·750 exactly
        let m = -(0.36 * PI).cos();
        // excursion measured from t = 0 adds sin θ_m = 1
        let phase = -(2.0 * 0.5 * 0.25) * (m + 1.0);
        let amp = 2.0 * 0.5 * 0.25 * m;
        let frozen = cfg.rabi * (phase.cos() + amp * phase.sin());
        assert_abs_diff_eq!(h.x, frozen, epsilon = 1e-6 * cfg.rabi);
    }

    #[test]
    fn first_frame_bare_resonant_is_static_x_drive() {
        let cfg = preset_cfg(Scheme::Bare);
        for t in [0.0, 1e-8, 3.3e-7] {
            let h = cfg.first_frame_hamiltonian(t);
            assert_abs_diff_eq!(h.x, cfg.rabi / 2.0, epsilon = 1e-6);
            assert_abs_diff_eq!(h.y, 0.0, epsilon = 1e-6);
            assert_abs_diff_eq!(h.z, 0.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn amccd_first_frame_modulation_at_origin() {
        // θ = π/2, t = 0: −α_Aε_m sin(−π/2) σ_{π/2} = +ε_m σ_y
        let cfg = preset_cfg(Scheme::Amccd);
        let m = cfg.first_frame_modulation(0.0);
        let eps = cfg.rabi / 4.0;
        assert_abs_diff_eq!(m.x, 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m.y, eps, epsilon = 1e-6);
        assert_abs_diff_eq!(m.z, 0.0, epsilon = 1e-6);
        let with_err = cfg.with_rabi_error(0.1 * cfg.rabi).first_frame_modulation(0.0);
        assert_abs_diff_eq!(with_err.y, 1.1 * eps, epsilon = 1e-6);
    }

    #[test]
    fn counter_rotating_examples() {
        let cm = preset_cfg(Scheme::Cmccd);
        let eps = cm.mod_strength;
        assert_eq!(counter_rotating_coefficient(&cm).unwrap(), 0.0);
        assert_eq!(preset_cfg(Scheme::Amccd).counter_rotating_coefficient(), -eps / 2.0);
        assert_eq!(preset_cfg(Scheme::Pmccd).counter_rotating_coefficient(), eps / 2.0);
        let err = cm.with_rabi_error(0.1 * cm.rabi).counter_rotating_coefficient();
        assert_abs_diff_eq!(err, -0.025 * eps, epsilon = 1e-12 * eps);
    }

    #[test]
    fn second_frame_co_rotating_directions() {
        for s in Scheme::CCD {
            let cfg = preset_cfg(s);
            let co = cfg.second_frame_co_rotating();
            assert_abs_diff_eq!(co.y, cfg.mod_strength / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(co.z, 0.0, epsilon = 1e-9);
            let idle = cfg.with_mod_phase(0.0).second_frame_co_rotating();
            assert_abs_diff_eq!(idle.z, cfg.mod_strength / 2.0, epsilon = 1e-9);
            assert_abs_diff_eq!(idle.x.hypot(idle.y), 0.0, epsilon = 1e-9);
        }
        let cm = preset_cfg(Scheme::Cmccd);
        for k in 0..100 {
            assert_eq!(cm.second_frame_counter_rotating(k as f64 * 1.3e-9).norm(), 0.0);
        }
    }

    #[test]
    fn frame_unitaries_special_times() {
        let cfg = preset_cfg(Scheme::Pmccd);
        assert!(cfg.first_frame_unitary(0.0).max_abs_diff(&Operator::identity()) < 1e-15);
        assert!(cfg.second_frame_unitary(0.0).max_abs_diff(&Operator::identity()) < 1e-15);
        let period = TAU / cfg.rabi;
        let u = cfg.second_frame_unitary(period);
        assert!(u.max_abs_diff(&Operator::identity().scale((-1.0).into())) < 1e-12);
        let u2 = cfg.second_frame_unitary(2.0 * period);
        assert!(u2.max_abs_diff(&Operator::identity()) < 1e-12);
        let half = cfg.second_frame_unitary(PI / cfg.rabi);
        let expect = Operator::sigma_x().scale(num_complex::Complex::new(0.0, -1.0));
        assert!(half.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn first_frame_phase_closed_form() {
        let a = preset_cfg(Scheme::Amccd);
        let t = 0.37e-6;
        let plain = Hamiltonian::sigma_z(1.0).exp_step(a.omega_mw * t / 2.0);
        assert!(a.first_frame_unitary(t).max_abs_diff(&plain) < 1e-9);
        // α_P = 1/2: a full modulation period contributes nothing
        let c = preset_cfg(Scheme::Cmccd);
        let period = TAU / c.rabi;
        assert_abs_diff_eq!(c.first_frame_phase(period), c.omega_mw * PI / c.rabi, epsilon = 1e-6);
        // derivative of Φ matches the frame generator coefficient (finite difference oracle)
        let h = 1e-13;
        for t in [1e-8, 2e-7, 5e-7] {
            let fd = (c.first_frame_phase(t + h) - c.first_frame_phase(t - h)) / (2.0 * h);
            let gen = c.omega_mw / 2.0 - c.alpha_p * c.mod_strength * (c.rabi * t - c.mod_phase).cos();
            assert!((fd - gen).abs() / gen < 1e-5);
        }
    }

    #[test]
    fn cmccd_modulation_is_circular() {
        let cfg = preset_cfg(Scheme::Cmccd).with_mw_phase(0.3).with_mod_phase(1.1);
        for k in 0..1000 {
            let t = k as f64 * 0.77e-9;
            let n = cfg.first_frame_modulation(t).norm();
            assert!((n - cfg.mod_strength / 2.0).abs() <= 1e-12 * cfg.mod_strength);
        }
    }

    #[test]
    fn iq_bare_is_constant_in_phase() {
        let cfg = preset_cfg(Scheme::Bare).with_rabi_error(0.05 * 2.0 * PI * 3.6e6);
        let s = cfg.iq_baseband(123e-9);
        assert_eq!(s.i, cfg.rabi + cfg.rabi_error);
        assert_eq!(s.q, 0.0);
    }

    #[test]
    fn iq_pmccd_at_origin_is_pure_rotation() {
        let cfg = preset_cfg(Scheme::Pmccd);
        let s = cfg.iq_baseband(0.0);
        // the excursion starts at zero: I = Ω₀, Q = 0
        assert_abs_diff_eq!(s.i, cfg.rabi, epsilon = 1e-6);
        assert_abs_diff_eq!(s.q, 0.0, epsilon = 1e-6);
        let s = cfg.iq_baseband(0.25 * std::f64::consts::TAU / cfg.rabi);
        // p = (2ε/Ω₀)(sin 0 + 1) = 0.5, constant magnitude Ω₀
        assert_abs_diff_eq!(s.i.hypot(s.q), cfg.rabi, epsilon = 1e-6);
        assert_abs_diff_eq!(s.q.atan2(s.i), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn iq_amccd_matches_trig_expansion_on_grid() {
        let cfg = preset_cfg(Scheme::Amccd).with_rabi_error(0.07 * 2.0 * PI * 3.6e6);
        let period = TAU / cfg.rabi;
        for k in 0..1000 {
            let t = k as f64 * period / 1000.0 * 3.0;
            let s = cfg.iq_baseband(t);
            // amplitude modulation lives entirely in the quadrature envelope
            assert_eq!(s.i, cfg.rabi + cfg.rabi_error);
            let direct = lab_coefficient_oracle(&cfg, t);
            let recon = s.reconstruct(cfg.omega_mw, cfg.mw_phase);
            assert!((recon - direct).abs() <= 1e-10 * (cfg.rabi + cfg.rabi_error) * 1.5);
        }
    }

    #[test]
    fn fastest_frequency_per_frame() {
        let cfg = preset_cfg(Scheme::Cmccd);
        assert!(cfg.fastest_frequency(Frame::Lab) >= cfg.omega_mw);
        assert!(cfg.fastest_frequency(Frame::Second) >= 2.0 * cfg.rabi);
        let det = cfg.with_detuning(5.0 * cfg.rabi);
        assert!(det.fastest_frequency(Frame::First) >= 5.0 * cfg.rabi);
    }

    fn any_scheme() -> impl Strategy<Value = Scheme> {
        prop_oneof![Just(Scheme::Bare), Just(Scheme::Amccd), Just(Scheme::Pmccd), Just(Scheme::Cmccd)]
    }

    proptest! {
        #[test]
        fn iq_round_trip(s in any_scheme(), t in 0.0..1e-6f64, err in -0.3..0.3f64, det in -0.5..0.5f64,
                         theta in -PI..PI, phi in -PI..PI, ratio in 0.0..1.0f64) {
            let base = preset_cfg(s);
            let cfg = base.with_rabi_error(err * base.rabi).with_detuning(det * base.rabi)
                .with_mod_phase(theta).with_mw_phase(phi).with_mod_ratio(ratio);
            let sample = cfg.iq_baseband(t);
            let direct = lab_coefficient_oracle(&cfg, t);
            let scale = (cfg.rabi + cfg.rabi_error).abs() * (1.0 + 2.0 * ratio);
            prop_assert!((sample.reconstruct(cfg.omega_mw, cfg.mw_phase) - direct).abs() <= 1e-10 * scale);
        }

        #[test]
        fn second_frame_is_conjugated_first_frame(s in any_scheme(), t in 0.0..2e-6f64,
                                                  err in -0.3..0.3f64, det in -1.0..1.0f64,
                                                  theta in -PI..PI, phi in -PI..PI) {
            // H₂ = U₂† H₁ U₂ − (Ω₀/2)σ_φ, checked on matrices
            let base = preset_cfg(s);
            let cfg = base.with_rabi_error(err * base.rabi).with_detuning(det * base.rabi)
                .with_mod_phase(theta).with_mw_phase(phi);
            let u = cfg.second_frame_unitary(t);
            let h1 = cfg.first_frame_hamiltonian(t).matrix();
            let h0 = Hamiltonian::axis(cfg.mw_phase, cfg.rabi / 2.0).matrix();
            let conj = u.adjoint() * h1 * u - h0;
            let h2 = cfg.second_frame_hamiltonian(t).matrix();
            prop_assert!(conj.max_abs_diff(&h2) <= 1e-9 * cfg.rabi);
        }

        #[test]
        fn first_frame_generator_matches_unitary_derivative(s in any_scheme(), t in 1e-8..1e-6f64) {
            // i dU/dt U† = H₀⁽¹⁾ for U = exp(−iΦσ_z), checked by central differences on Φ
            let cfg = preset_cfg(s).with_carrier(2.0 * PI * 1e9);
            let h = 1e-12;
            let fd = (cfg.first_frame_phase(t + h) - cfg.first_frame_phase(t - h)) / (2.0 * h);
            let gen = cfg.omega_mw / 2.0 - cfg.alpha_p * cfg.mod_strength * (cfg.rabi * t - cfg.mod_phase).cos();
            prop_assert!((fd - gen).abs() <= 1e-4 * gen.abs());
        }
    }

    #[test]
    fn theta_half_pi_gives_y_axis_drive() {
        let cfg = preset_cfg(Scheme::Cmccd);
        assert_abs_diff_eq!(cfg.mod_phase, FRAC_PI_2);
    }
}
