//! Time evolution `i∂ψ/∂t = H(t)ψ` for traceless single-qubit Hamiltonians.
//!
//! Two one-step schemes are provided. Both build each step from closed-form
//! SU(2) exponentials, so every step is unitary to rounding:
//!
//! * exponential midpoint: `exp(−i h H(t + h/2))`, second order;
//! * a two-exponential commutator-free Magnus scheme, fourth order, sampling
//!   H at the Gauss–Legendre nodes `t + (1/2 ∓ √3/6)h`.
//!
//! Interval lengths are split into `n` equal steps with
//! `h = min(max_step, T_fastest / steps_per_fastest_period)`.

use std::marker::PhantomData;

use crate::drive::{DriveConfig, Frame};
use crate::error::{CcdError, Result};
use crate::qubit::{Hamiltonian, Operator, QubitState, UnitaryOp};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    ExponentialMidpoint,
    CommutatorFree4,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ExponentialMidpoint => "midpoint",
            Method::CommutatorFree4 => "cf4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "midpoint" | "piecewise-exponential-midpoint" => Some(Method::ExponentialMidpoint),
            "cf4" | "commutator-free-4th-order" => Some(Method::CommutatorFree4),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorSpec<T> {
    pub method: Method,
    /// Upper bound on the step length (s).
    pub max_step: T,
    /// Steps per period of the fastest dynamics; must be at least 40.
    pub steps_per_fastest_period: u32,
}

impl<T: Real> IntegratorSpec<T> {
    pub const MIN_STEPS_PER_PERIOD: u32 = 40;

    /// Default for lab-frame propagation, where the carrier dominates the cost.
    pub fn lab_default() -> Self {
        Self { method: Method::CommutatorFree4, max_step: T::infinity(), steps_per_fastest_period: 40 }
    }

    /// Default for the rotating frames.
    pub fn rotating_default() -> Self {
        Self { method: Method::CommutatorFree4, max_step: T::infinity(), steps_per_fastest_period: 200 }
    }

    pub fn for_frame(frame: Frame) -> Self {
        match frame {
            Frame::Lab => Self::lab_default(),
            Frame::First | Frame::Second => Self::rotating_default(),
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_steps_per_period(mut self, n: u32) -> Self {
        self.steps_per_fastest_period = n;
        self
    }

    pub fn with_max_step(mut self, max_step: T) -> Self {
        self.max_step = max_step;
        self
    }

    /// The same spec with twice as many steps, for step-halving checks.
    pub fn halved(&self) -> Self {
        Self {
            method: self.method,
            max_step: self.max_step / T::lit(2.0),
            steps_per_fastest_period: self.steps_per_fastest_period * 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps_per_fastest_period < Self::MIN_STEPS_PER_PERIOD {
            return Err(CcdError::Validation(format!(
                "steps_per_fastest_period must be ≥ {} (got {})",
                Self::MIN_STEPS_PER_PERIOD,
                self.steps_per_fastest_period
            )));
        }
        if !(self.max_step > T::zero()) {
            return Err(CcdError::Validation("max_step must be positive".into()));
        }
        Ok(())
    }

    /// Effective step for dynamics whose fastest angular frequency is `omega`.
    pub fn effective_step(&self, fastest: Option<T>) -> T {
        match fastest {
            Some(w) if w > T::zero() => {
                let period = T::TAU() / w;
                self.max_step.min(period / T::from_u32(self.steps_per_fastest_period).unwrap())
            }
            _ => self.max_step,
        }
    }
}

/// A time-dependent Hamiltonian that can be propagated.
pub trait TimeDependent<T: Real> {
    fn at(&self, t: T) -> Hamiltonian<T>;

    /// Angular frequency of the fastest dynamics, if known. Without it the
    /// step is bounded only by `max_step`.
    fn fastest_frequency(&self) -> Option<T> {
        None
    }
}

/// Adapter for closures `t ↦ H(t)`, optionally tagged with a fastest frequency.
pub struct FromFn<T, F> {
    f: F,
    fastest: Option<T>,
}

impl<T: Real, F: Fn(T) -> Hamiltonian<T>> FromFn<T, F> {
    pub fn new(f: F) -> Self {
        Self { f, fastest: None }
    }

    pub fn with_fastest(f: F, omega: T) -> Self {
        Self { f, fastest: Some(omega) }
    }
}

impl<T: Real, F: Fn(T) -> Hamiltonian<T>> TimeDependent<T> for FromFn<T, F> {
    #[inline]
    fn at(&self, t: T) -> Hamiltonian<T> {
        (self.f)(t)
    }
    fn fastest_frequency(&self) -> Option<T> {
        self.fastest
    }
}

/// Constant Hamiltonian.
#[derive(Clone, Copy, Debug)]
pub struct Constant<T>(pub Hamiltonian<T>);

impl<T: Real> TimeDependent<T> for Constant<T> {
    fn at(&self, _t: T) -> Hamiltonian<T> {
        self.0
    }
    fn fastest_frequency(&self) -> Option<T> {
        Some(T::lit(2.0) * self.0.norm())
    }
}

/// One of the three Hamiltonian views of a validated drive configuration.
#[derive(Clone, Copy, Debug)]
pub struct FrameView<T> {
    cfg: DriveConfig<T>,
    frame: Frame,
}

impl<T: Real> FrameView<T> {
    pub fn new(cfg: &DriveConfig<T>, frame: Frame) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg: *cfg, frame })
    }

    pub fn config(&self) -> &DriveConfig<T> {
        &self.cfg
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }
}

impl<T: Real> TimeDependent<T> for FrameView<T> {
    #[inline]
    fn at(&self, t: T) -> Hamiltonian<T> {
        match self.frame {
            Frame::Lab => self.cfg.lab_hamiltonian(t),
            Frame::First => self.cfg.first_frame_hamiltonian(t),
            Frame::Second => self.cfg.second_frame_hamiltonian(t),
        }
    }
    fn fastest_frequency(&self) -> Option<T> {
        Some(self.cfg.fastest_frequency(self.frame))
    }
}

impl<T: Real, H: TimeDependent<T> + ?Sized> TimeDependent<T> for &H {
    #[inline]
    fn at(&self, t: T) -> Hamiltonian<T> {
        (**self).at(t)
    }
    fn fastest_frequency(&self) -> Option<T> {
        (**self).fastest_frequency()
    }
}

/// Stateless single-step kernels.
struct Stepper<T> {
    method: Method,
    _t: PhantomData<T>,
}

impl<T: Real> Stepper<T> {
    fn new(method: Method) -> Self {
        Self { method, _t: PhantomData }
    }

    #[inline]
    fn step<H: TimeDependent<T> + ?Sized>(&self, h: &H, t: T, dt: T) -> Operator<T> {
        match self.method {
            Method::ExponentialMidpoint => h.at(t + dt / T::lit(2.0)).exp_step(dt),
            Method::CommutatorFree4 => {
                let r = T::lit(3.0).sqrt() / T::lit(6.0);
                let half = T::lit(0.5);
                let h1 = h.at(t + (half - r) * dt);
                let h2 = h.at(t + (half + r) * dt);
                let a1 = T::lit(0.25) - r;
                let a2 = T::lit(0.25) + r;
                // applied right to left: the first exponential weights the earlier node
                let first = (h1.scaled(a2) + h2.scaled(a1)).exp_step(dt);
                let second = (h1.scaled(a1) + h2.scaled(a2)).exp_step(dt);
                second * first
            }
        }
    }
}

fn check_interval<T: Real>(t0: T, t1: T) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(CcdError::Validation("propagation bounds must be finite".into()));
    }
    if t1 < t0 {
        return Err(CcdError::Validation(format!("propagation requires t1 ≥ t0 (t0 = {t0}, t1 = {t1})")));
    }
    Ok(())
}

fn step_count<T: Real>(span: T, h: T) -> u64 {
    if span <= T::zero() {
        return 0;
    }
    let n = (span / h).ceil();
    n.to_u64().unwrap_or(u64::MAX).max(1)
}

/// Propagates a state through `[t0, t1]` in `n` equal steps, renormalizing
/// small drift and failing on large drift.
fn propagate_state<T: Real, H: TimeDependent<T> + ?Sized>(
    h: &H,
    psi: QubitState<T>,
    t0: T,
    t1: T,
    spec: &IntegratorSpec<T>,
    step_counter: &mut u64,
) -> Result<QubitState<T>> {
    let n = step_count(t1 - t0, spec.effective_step(h.fastest_frequency()));
    if n == 0 {
        return Ok(psi);
    }
    let dt = (t1 - t0) / T::from_u64(n).unwrap();
    let stepper = Stepper::new(spec.method);
    let mut psi = psi;
    let check_every = 1024u64;
    for k in 0..n {
        let t = t0 + T::from_u64(k).unwrap() * dt;
        psi = stepper.step(h, t, dt).apply(&psi);
        if (k + 1) % check_every == 0 || k + 1 == n {
            psi = guard_norm(psi, t + dt, *step_counter + k + 1, dt)?;
        }
    }
    *step_counter += n;
    Ok(psi)
}

fn guard_norm<T: Real>(psi: QubitState<T>, t: T, steps: u64, dt: T) -> Result<QubitState<T>> {
    let drift = (psi.norm_sqr() - T::one()).abs();
    if !(drift <= T::drift_failure_threshold()) {
        return Err(CcdError::IntegratorFailure {
            time: t.to_f64_lossy(),
            drift: drift.to_f64_lossy(),
            steps,
            step: dt.to_f64_lossy(),
        });
    }
    if drift > T::renormalize_threshold() {
        Ok(psi.renormalized())
    } else {
        Ok(psi)
    }
}

/// ψ(t1) for ψ(t0) = `psi0`.
pub fn evolve<T: Real, H: TimeDependent<T> + ?Sized>(
    h: &H,
    psi0: &QubitState<T>,
    t0: T,
    t1: T,
    spec: &IntegratorSpec<T>,
) -> Result<QubitState<T>> {
    spec.validate()?;
    check_interval(t0, t1)?;
    psi0.check_normalized()?;
    let mut steps = 0;
    propagate_state(h, *psi0, t0, t1, spec, &mut steps)
}

/// States at every time in `times` (ascending, all ≥ `t0`), starting from
/// `psi0` at `t0`. Each gap is integrated on its own uniform sub-grid so the
/// returned samples sit exactly on the requested times.
pub fn evolve_sampled<T: Real, H: TimeDependent<T> + ?Sized>(
    h: &H,
    psi0: &QubitState<T>,
    t0: T,
    times: &[T],
    spec: &IntegratorSpec<T>,
) -> Result<Vec<QubitState<T>>> {
    spec.validate()?;
    psi0.check_normalized()?;
    let mut out = Vec::with_capacity(times.len());
    let mut psi = *psi0;
    let mut t = t0;
    let mut steps = 0;
    for &tn in times {
        check_interval(t, tn)?;
        psi = propagate_state(h, psi, t, tn, spec, &mut steps)?;
        t = tn;
        out.push(psi);
    }
    Ok(out)
}

/// U(t1, t0), the propagator acting on both basis columns.
pub fn propagator_unitary<T: Real, H: TimeDependent<T> + ?Sized>(
    h: &H,
    t0: T,
    t1: T,
    spec: &IntegratorSpec<T>,
) -> Result<UnitaryOp<T>> {
    spec.validate()?;
    check_interval(t0, t1)?;
    let n = step_count(t1 - t0, spec.effective_step(h.fastest_frequency()));
    if n == 0 {
        return Ok(Operator::identity());
    }
    let dt = (t1 - t0) / T::from_u64(n).unwrap();
    let stepper = Stepper::new(spec.method);
    let mut u = Operator::identity();
    for k in 0..n {
        let t = t0 + T::from_u64(k).unwrap() * dt;
        u = stepper.step(h, t, dt) * u;
        if (k + 1) % 1024 == 0 || k + 1 == n {
            let err = u.unitarity_error();
            if !(err <= T::drift_failure_threshold()) {
                return Err(CcdError::IntegratorFailure {
                    time: (t + dt).to_f64_lossy(),
                    drift: err.to_f64_lossy(),
                    steps: k + 1,
                    step: dt.to_f64_lossy(),
                });
            }
            if err > T::renormalize_threshold() {
                u = reunitarize(&u);
            }
        }
    }
    Ok(u)
}

/// Projects a nearly unitary operator back onto U(2) by Gram–Schmidt on its columns.
fn reunitarize<T: Real>(u: &Operator<T>) -> Operator<T> {
    let c0 = QubitState::from_amps_unchecked(u.m[0][0], u.m[1][0]).renormalized();
    let [a, b] = c0.amplitudes();
    let mut c1 = [u.m[0][1], u.m[1][1]];
    let proj = a.conj() * c1[0] + b.conj() * c1[1];
    c1[0] = c1[0] - a * proj;
    c1[1] = c1[1] - b * proj;
    let c1 = QubitState::from_amps_unchecked(c1[0], c1[1]).renormalized();
    let [c, d] = c1.amplitudes();
    Operator::new([[a, c], [b, d]])
}

/// Norm of `ψ_h − ψ_{h/2}` at `t1`: the step-halving (Richardson) consistency check.
pub fn step_halving_difference<T: Real, H: TimeDependent<T> + ?Sized>(
    h: &H,
    psi0: &QubitState<T>,
    t0: T,
    t1: T,
    spec: &IntegratorSpec<T>,
) -> Result<T> {
    let coarse = evolve(h, psi0, t0, t1, spec)?;
    let fine = evolve(h, psi0, t0, t1, &spec.halved())?;
    Ok(coarse.distance(&fine))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::Scheme;
    use crate::qubit::state_fidelity;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn rot() -> IntegratorSpec<f64> {
        IntegratorSpec::rotating_default()
    }

    #[test]
    fn zero_hamiltonian_leaves_state() {
        let psi = QubitState::from_angles(0.7, 1.9);
        let out = evolve(&Constant(Hamiltonian::zero()), &psi, 0.0, 1.0, &rot().with_max_step(0.01)).unwrap();
        assert!(out.distance(&psi) < 1e-15);
    }

    #[test]
    fn constant_pi_pulse() {
        let omega = TAU * 3.6e6;
        let h = Constant(Hamiltonian::axis(0.0, omega / 2.0));
        let out = evolve(&h, &QubitState::ground(), 0.0, PI / omega, &rot()).unwrap();
        assert!(state_fidelity(&out, &QubitState::excited()) >= 1.0 - 1e-10);
    }

    #[test]
    fn bare_detuned_rabi_matches_analytic_formula() {
        let cfg = DriveConfig::<f64>::new(Scheme::Bare);
        let cfg = cfg.with_detuning(cfg.rabi);
        let view = FrameView::new(&cfg, Frame::First).unwrap();
        let out = evolve(&view, &QubitState::ground(), 0.0, PI / cfg.rabi, &rot()).unwrap();
        let expect = 0.5 * (2f64.sqrt() * PI / 2.0).sin().powi(2);
        assert!((out.excited_population() - expect).abs() < 1e-10);
        assert!((expect - 0.3166).abs() < 1e-4);
    }

    #[test]
    fn identity_for_empty_interval() {
        let cfg = DriveConfig::<f64>::new(Scheme::Amccd);
        let view = FrameView::new(&cfg, Frame::Second).unwrap();
        let u = propagator_unitary(&view, 1e-7, 1e-7, &rot()).unwrap();
        assert_eq!(u, Operator::identity());
    }

    #[test]
    fn constant_hamiltonian_matches_closed_form() {
        let hm = Hamiltonian::new(1.3e6, -0.4e6, 2.2e6);
        for method in [Method::ExponentialMidpoint, Method::CommutatorFree4] {
            let spec = rot().with_method(method);
            let u = propagator_unitary(&Constant(hm), 2e-7, 9e-7, &spec).unwrap();
            assert!(u.max_abs_diff(&hm.exp_step(7e-7)) < 1e-12, "{method:?}");
        }
    }

    #[test]
    fn cmccd_second_frame_pi_rotation() {
        let cfg = DriveConfig::<f64>::new(Scheme::Cmccd);
        let view = FrameView::new(&cfg, Frame::Second).unwrap();
        let u = propagator_unitary(&view, 0.0, PI / cfg.mod_strength, &rot()).unwrap();
        let p = u.m[1][0].norm_sqr();
        assert!(p >= 1.0 - 1e-10, "{p}");
        // rotation about +y: exp(−iπσ_y/2) = −iσ_y
        let expect = Operator::sigma_y().scale(num_complex::Complex::new(0.0, -1.0));
        assert!(u.equals_up_to_phase(&expect, 1e-9));
    }

    #[test]
    fn rejects_bad_inputs() {
        let h = Constant(Hamiltonian::<f64>::zero());
        assert!(evolve(&h, &QubitState::ground(), 1.0, 0.0, &rot()).is_err());
        assert!(evolve(&h, &QubitState::ground(), 0.0, 1.0, &rot().with_steps_per_period(10)).is_err());
    }

    #[test]
    fn step_halving_on_ccd_second_frame() {
        for s in Scheme::ALL {
            let cfg = DriveConfig::<f64>::new(s).with_detuning(0.1 * TAU * 3.6e6);
            let view = FrameView::new(&cfg, Frame::Second).unwrap();
            let d = step_halving_difference(&view, &QubitState::ground(), 0.0, 4e-6, &rot()).unwrap();
            assert!(d < 1e-8, "{s}: {d:e}");
        }
    }

    #[test]
    fn midpoint_and_cf4_agree() {
        let cfg = DriveConfig::<f64>::new(Scheme::Pmccd).with_detuning(0.2 * TAU * 3.6e6);
        let view = FrameView::new(&cfg, Frame::First).unwrap();
        let a = evolve(&view, &QubitState::ground(), 0.0, 1e-6, &rot()).unwrap();
        let b = evolve(
            &view,
            &QubitState::ground(),
            0.0,
            1e-6,
            &rot().with_method(Method::ExponentialMidpoint).with_steps_per_period(4000),
        )
        .unwrap();
        assert!(a.distance(&b) < 1e-6);
    }

    #[test]
    fn sampled_matches_direct() {
        let cfg = DriveConfig::<f64>::new(Scheme::Amccd);
        let view = FrameView::new(&cfg, Frame::First).unwrap();
        let times = [1e-7, 2.5e-7, 4e-7];
        let sampled = evolve_sampled(&view, &QubitState::ground(), 0.0, &times, &rot()).unwrap();
        let direct = evolve(&view, &QubitState::ground(), 0.0, 4e-7, &rot()).unwrap();
        assert!(sampled[2].distance(&direct) < 1e-9);
    }

    #[test]
    fn single_precision_propagation() {
        let cfg = DriveConfig::<f32>::new(Scheme::Cmccd);
        let view = FrameView::new(&cfg, Frame::Second).unwrap();
        let out = evolve(
            &view,
            &QubitState::ground(),
            0.0,
            std::f32::consts::PI / cfg.mod_strength,
            &IntegratorSpec::rotating_default(),
        )
        .unwrap();
        assert!(out.excited_population() > 1.0 - 1e-4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn unitarity_and_composition(scheme in 0usize..4, det in -1.0..1.0f64, err in -0.3..0.3f64,
                                      t1 in 0.0..1e-6f64, t2 in 0.0..1e-6f64) {
            let base = DriveConfig::<f64>::new(Scheme::ALL[scheme]);
            let cfg = base.with_detuning(det * base.rabi).with_rabi_error(err * base.rabi);
            for frame in [Frame::First, Frame::Second] {
                let view = FrameView::new(&cfg, frame).unwrap();
                let (ta, tb) = (t1.min(t2), t1.max(t2));
                let u1 = propagator_unitary(&view, 0.0, ta, &rot()).unwrap();
                let u2 = propagator_unitary(&view, ta, tb, &rot()).unwrap();
                let u = propagator_unitary(&view, 0.0, tb, &rot()).unwrap();
                prop_assert!(u.unitarity_error() < 1e-10);
                prop_assert!((u2 * u1).max_abs_diff(&u) < 1e-9);
            }
        }
    }
}
