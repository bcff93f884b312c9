use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ccd_core::experiments::{randomized_benchmarking, NoiseSpec, RbOptions};
use ccd_core::propagator::{evolve, FrameView};
use ccd_core::pulse::carrier_phase_for_axis;
use ccd_core::qubit::state_fidelity;
use ccd_core::{DriveConfig, Frame, Integrator, IntegratorSpec, Program, PulseProgram, QubitState, Scheme};

fn ramsey_like(cfg: DriveConfig<f64>) -> Program {
    let mut p = Program::new(cfg);
    p.gate(FRAC_PI_2, carrier_phase_for_axis(0.0, &cfg)).unwrap();
    p.idle(3.0 * TAU / cfg.rabi).unwrap();
    p.gate(FRAC_PI_2, carrier_phase_for_axis(FRAC_PI_2, &cfg)).unwrap();
    p.pad_for_readout().unwrap();
    p
}

#[test]
fn program_frames_agree_at_readout() {
    let spec = Integrator::rotating_default();
    for s in Scheme::CCD {
        let cfg = DriveConfig::new(s).with_detuning(0.03 * TAU * 3.6e6);
        let c = ramsey_like(cfg).compile().unwrap();
        let second = c.simulate_in(Frame::Second, &QubitState::ground(), &spec).unwrap();
        let first = c.simulate_in(Frame::First, &QubitState::ground(), &spec).unwrap();
        assert!(1.0 - state_fidelity(&first, &second) < 1e-9, "{s}");
    }
}

#[test]
fn program_matches_lab_frame_propagation() {
    for s in Scheme::CCD {
        let base = DriveConfig::new(s);
        let cfg = base.with_carrier(1e3 * base.rabi);
        let c = ramsey_like(cfg).compile().unwrap();
        let rot = c.spin_up_fraction(&Integrator::rotating_default()).unwrap();
        let lab =
            c.simulate_in(Frame::Lab, &QubitState::ground(), &Integrator::lab_default()).unwrap().excited_population();
        assert!((rot - lab).abs() < 5e-3, "{s}: rotating {rot} lab {lab}");
    }
}

#[test]
fn single_precision_core() {
    let cfg = DriveConfig::<f32>::new(Scheme::Cmccd);
    let view = FrameView::new(&cfg, Frame::Second).unwrap();
    let out =
        evolve(&view, &QubitState::ground(), 0.0, PI as f32 / cfg.mod_strength, &IntegratorSpec::rotating_default())
            .unwrap();
    assert!(out.excited_population() > 1.0 - 1e-4);

    let mut p = PulseProgram::new(cfg);
    p.gate(PI as f32, carrier_phase_for_axis(FRAC_PI_2 as f32, &cfg)).unwrap();
    p.pad_for_readout().unwrap();
    let up = p.compile().unwrap().spin_up_fraction(&IntegratorSpec::rotating_default()).unwrap();
    assert!(up > 1.0 - 1e-4, "{up}");
}

#[test]
fn rb_is_independent_of_pool_size() {
    let cfg = DriveConfig::new(Scheme::Amccd).with_rabi(TAU * 2.2e6);
    let opts = RbOptions {
        lengths: vec![1, 2, 5],
        k: 6,
        seed: 21,
        noise: NoiseSpec::new(TAU * 1e5, 0.01, 3, 21),
        ..RbOptions::default()
    };
    let run = |n| {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| randomized_benchmarking(&cfg, &opts))
    };
    let a = run(1).unwrap();
    let b = run(4).unwrap();
    assert_eq!(
        a.signal.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.signal.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(a.f_c.to_bits(), b.f_c.to_bits());
}
