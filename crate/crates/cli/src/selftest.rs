//! Fast analytic-oracle checks run by `ccd-sim selftest`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ccd_core::clifford::{CliffordTable, MEAN_PRIMITIVES_PER_CLIFFORD};
use ccd_core::experiments::{randomized_benchmarking, y_pi_infidelity, RbMode, RbOptions};
use ccd_core::propagator::{evolve, propagator_unitary};
use ccd_core::pulse::carrier_phase_for_axis;
use ccd_core::qubit::state_fidelity;
use ccd_core::{Drive, Frame, Integrator, Program, Scheme, State};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), ccd_core::CcdError>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn preset(s: Scheme) -> Drive {
    Drive::new(s).with_rabi(TAU * 3.6e6)
}

pub fn run_selftest() -> Vec<Check> {
    let spec = Integrator::rotating_default();
    vec![
        check("counter_rotating_coefficients", || {
            let eps = preset(Scheme::Cmccd).mod_strength;
            let cm = preset(Scheme::Cmccd).counter_rotating_coefficient();
            let am = preset(Scheme::Amccd).counter_rotating_coefficient();
            let pm = preset(Scheme::Pmccd).counter_rotating_coefficient();
            let ok = cm == 0.0 && am == -eps / 2.0 && pm == eps / 2.0;
            Ok((ok, format!("cm={cm:e} am={:.6} pm={:.6} (units of eps_m)", am / eps, pm / eps)))
        }),
        check("frame_equivalence", || {
            let mut worst: f64 = 0.0;
            for s in Scheme::ALL {
                let cfg = preset(s)
                    .with_detuning(0.07 * TAU * 3.6e6)
                    .with_rabi_error(-0.04 * TAU * 3.6e6)
                    .with_mw_phase(0.3)
                    .with_mod_phase(1.1);
                let psi0 = State::from_angles(0.9, 0.4);
                let t = 0.77e-6;
                let first = ccd_core::propagator::FrameView::new(&cfg, Frame::First)?;
                let second = ccd_core::propagator::FrameView::new(&cfg, Frame::Second)?;
                let a = evolve(&first, &psi0, 0.0, t, &spec)?;
                let b = cfg.second_frame_unitary(t).apply(&evolve(&second, &psi0, 0.0, t, &spec)?);
                worst = worst.max(1.0 - state_fidelity(&a, &b));
            }
            Ok((worst <= 1e-8, format!("max infidelity {worst:e}")))
        }),
        check("bare_rabi_oracle", || {
            let cfg = preset(Scheme::Bare).with_detuning(TAU * 3.6e6);
            let view = ccd_core::propagator::FrameView::new(&cfg, Frame::First)?;
            let p = evolve(&view, &State::ground(), 0.0, PI / cfg.rabi, &spec)?.excited_population();
            let want = 0.5 * (2f64.sqrt() * FRAC_PI_2).sin().powi(2);
            Ok(((p - want).abs() <= 1e-9, format!("P(up)={p:.10} oracle={want:.10}")))
        }),
        check("cmccd_y_pi", || {
            let inf = y_pi_infidelity(&preset(Scheme::Cmccd), &spec)?;
            Ok((inf <= 1e-8, format!("infidelity {inf:e}")))
        }),
        check("detuned_bare_y_pi_oracle", || {
            let cfg = preset(Scheme::Bare);
            let inf = y_pi_infidelity(&cfg.with_detuning(0.1 * cfg.rabi), &spec)?;
            let want = 1.0 - (1.0 / 1.01) * (1.01f64.sqrt() * FRAC_PI_2).sin().powi(2);
            Ok(((inf - want).abs() <= 1e-9, format!("infidelity {inf:e} oracle {want:e}")))
        }),
        check("unitarity", || {
            let cfg = preset(Scheme::Amccd).with_detuning(1e6);
            let view = ccd_core::propagator::FrameView::new(&cfg, Frame::Second)?;
            let u = propagator_unitary(&view, 0.0, 3e-6, &spec)?;
            let e = u.unitarity_error();
            Ok((e <= 1e-10, format!("|U†U − I| = {e:e}")))
        }),
        check("clifford_group", || {
            let table = CliffordTable::<f64>::new()?;
            let mean = table.gates().iter().map(|g| g.decomposition.len() as f64).sum::<f64>() / table.len() as f64;
            let ok = table.len() == 24 && (mean - MEAN_PRIMITIVES_PER_CLIFFORD).abs() < 1e-12;
            Ok((ok, format!("{} elements, {mean} primitives per element", table.len())))
        }),
        check("iq_round_trip", || {
            let mut worst: f64 = 0.0;
            for s in Scheme::ALL {
                let cfg = preset(s).with_carrier(TAU * 1e9);
                let mut p = Program::new(cfg);
                p.gate(PI, carrier_phase_for_axis(FRAC_PI_2, &cfg))?;
                p.pad_for_readout()?;
                let c = p.compile()?;
                let times: Vec<f64> = (0..1000).map(|k| k as f64 * c.total_duration() / 1000.0).collect();
                for q in c.iq_samples(&times) {
                    let d = (q.reconstruct(cfg.omega_mw, 0.0) - c.lab_drive_coefficient(q.t)).abs();
                    worst = worst.max(d / cfg.rabi);
                }
            }
            Ok((worst <= 1e-10, format!("max relative deviation {worst:e}")))
        }),
        check("ideal_rb", || {
            let opts = RbOptions { mode: RbMode::IdealMatrices, lengths: vec![1, 4, 16], k: 5, ..RbOptions::default() };
            let r = randomized_benchmarking(&preset(Scheme::Cmccd), &opts)?;
            Ok(((r.f_c - 1.0).abs() <= 1e-12, format!("F_c = {}", r.f_c)))
        }),
    ]
}
