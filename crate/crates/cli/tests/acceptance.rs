//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are reported but do not fail the target;
//! every other criterion must pass.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::Instant;

use ccd_core::experiments::spectrum::bin_width;
use ccd_core::experiments::{
    bloch_trajectory, chevron_sweep, dominant_frequency, dressed_sequence_experiment, fit_cosine,
    fit_decaying_sinusoid, linspace, rabi_error_sweep, randomized_benchmarking, y_pi_infidelity, DressedKind, RbMode,
    RbOptions, SweepOptions,
};
use ccd_core::propagator::{evolve, propagator_unitary, step_halving_difference, FrameView};
use ccd_core::pulse::carrier_phase_for_axis;
use ccd_core::qubit::state_fidelity;
use ccd_core::{Drive, Frame, Integrator, Program, Scheme, State};
use ccd_sim::Dataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 6: PM marker spread under δ = 0.1Ω₀ exceeds the bare spread.
/// 7: Rabi error enters the second frame as a detuning of the dressed qubit.
const KNOWN_RED: &[u32] = &[6, 7];

type Outcome = Result<(bool, String), String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

fn drive(s: Scheme, rabi_mhz: f64) -> Drive {
    Drive::new(s).with_rabi(mhz(rabi_mhz))
}

fn rot() -> Integrator {
    Integrator::rotating_default()
}

fn e(x: impl std::fmt::Display) -> String {
    x.to_string()
}

fn c1() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in Scheme::CCD {
        let cfg = drive(s, 3.6);
        let c = cfg.counter_rotating_coefficient();
        let eps = cfg.mod_strength;
        ok &= match s {
            Scheme::Amccd => c == -eps / 2.0,
            Scheme::Pmccd => c == eps / 2.0,
            _ => c.abs() <= f64::EPSILON * eps,
        };
        parts.push(format!("{s}={:+}", c / eps));
    }
    Ok((ok, format!("{} (units of eps_m)", parts.join(" "))))
}

fn c2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for n in 0..100 {
        let s = Scheme::ALL[n % 4];
        let rabi = mhz(rng.random_range(1.0..5.0));
        let cfg = Drive::new(s)
            .with_rabi(rabi)
            .with_mod_ratio(rng.random_range(0.05..0.5))
            .with_detuning(rabi * rng.random_range(-0.5..0.5))
            .with_rabi_error(rabi * rng.random_range(-0.3..0.3))
            .with_mod_phase(rng.random_range(0.0..TAU))
            .with_mw_phase(rng.random_range(0.0..TAU));
        let psi0 = State::from_angles(rng.random_range(0.0..PI), rng.random_range(0.0..TAU));
        let t = rng.random_range(0.1..3.0) * 1e-6;
        let first = evolve(&FrameView::new(&cfg, Frame::First).map_err(e)?, &psi0, 0.0, t, &rot()).map_err(e)?;
        let second = evolve(&FrameView::new(&cfg, Frame::Second).map_err(e)?, &psi0, 0.0, t, &rot()).map_err(e)?;
        let back = cfg.second_frame_unitary(t).apply(&second);
        worst = worst.max(1.0 - state_fidelity(&first, &back));
    }
    Ok((worst <= 1e-8, format!("100 random configs, max 1-F = {worst:.2e}")))
}

fn c3() -> Outcome {
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for ratio in [1e3, 1e4] {
        for s in Scheme::CCD {
            let base = drive(s, 3.6);
            let cfg = base.with_carrier(ratio * base.rabi);
            for periods in [0.77, 1.93, 3.41] {
                let t = periods * TAU / cfg.rabi;
                let psi0 = State::ground();
                let lab =
                    evolve(&FrameView::new(&cfg, Frame::Lab).map_err(e)?, &psi0, 0.0, t, &Integrator::lab_default())
                        .map_err(e)?;
                let first =
                    evolve(&FrameView::new(&cfg, Frame::First).map_err(e)?, &psi0, 0.0, t, &rot()).map_err(e)?;
                let d = (lab.excited_population() - first.excited_population()).abs();
                let tol = 2.0 / ratio;
                ok &= d <= tol;
                worst_ratio = worst_ratio.max(d / tol);
            }
        }
    }
    Ok((ok, format!("18 cases, max |ΔP|/(2Ω₀/ω_mw) = {worst_ratio:.2e}")))
}

fn c4() -> Outcome {
    let cfg = drive(Scheme::Bare, 3.6);
    let durations = linspace(0.0, 10e-6, 512);
    let detunings = linspace(-2.0 * cfg.rabi, 2.0 * cfg.rabi, 41);
    let grid = chevron_sweep(&cfg, &detunings, &durations, &SweepOptions::default()).map_err(e)?;
    let mut worst: f64 = 0.0;
    for (i, d) in detunings.iter().enumerate() {
        let f = dominant_frequency(&durations, grid.row(i)).map_err(e)?;
        let want = (cfg.rabi * cfg.rabi + d * d).sqrt() / TAU;
        worst = worst.max((f / want - 1.0).abs());
    }
    Ok((worst <= 0.01, format!("41 detunings over |δ| ≤ 2Ω₀, max relative error {:.3}%", 100.0 * worst)))
}

fn c5() -> Outcome {
    let inf = |s: Scheme, d: f64| {
        let cfg = drive(s, 3.6);
        y_pi_infidelity(&cfg.with_detuning(d * cfg.rabi), &rot()).map_err(e)
    };
    let cm = inf(Scheme::Cmccd, 0.0)?;
    let am = inf(Scheme::Amccd, 0.0)?;
    let pm = inf(Scheme::Pmccd, 0.0)?;
    let a = cm <= 1e-8;
    let b = am > 0.0 && pm > 0.0 && am > cm && pm > cm;
    let oracle = 1.0 - (1.0 / 1.01) * (1.01f64.sqrt() * FRAC_PI_2).sin().powi(2);
    let mut c = true;
    let mut detail = Vec::new();
    for d in [0.1, -0.1] {
        let bare = inf(Scheme::Bare, d)?;
        c &= (bare - oracle).abs() <= 1e-4;
        for s in Scheme::CCD {
            let v = inf(s, d)?;
            c &= v < bare;
            if d > 0.0 {
                detail.push(format!("{s}={v:.2e}"));
            }
        }
        if d > 0.0 {
            detail.push(format!("bare={bare:.3e} (oracle {oracle:.3e})"));
        }
    }
    Ok((a && b && c, format!("δ=0: cm={cm:.1e} am={am:.2e} pm={pm:.2e}; δ=0.1Ω₀: {}", detail.join(" "))))
}

fn spread(s: Scheme, d: f64) -> Result<f64, String> {
    let cfg = drive(s, 3.6);
    Ok(bloch_trajectory(&cfg.with_detuning(d * cfg.rabi), 20.0 * PI, 8, &rot()).map_err(e)?.spread)
}

fn c6() -> Outcome {
    let a = spread(Scheme::Bare, 0.0)? <= 1e-8 && spread(Scheme::Cmccd, 0.0)? <= 1e-8;
    let b = spread(Scheme::Amccd, 0.0)? > 0.0 && spread(Scheme::Pmccd, 0.0)? > 0.0;
    let bare = spread(Scheme::Bare, 0.1)?;
    let mut c = true;
    let mut detail = vec![format!("bare={bare:.3}")];
    for s in Scheme::CCD {
        let v = spread(s, 0.1)?;
        c &= v < bare;
        detail.push(format!("{s}={v:.3}"));
    }
    Ok((a && b && c, format!("zero-error ok={}, δ=0.1Ω₀ spreads: {}", a && b, detail.join(" "))))
}

fn c7() -> Outcome {
    let durations = linspace(0.0, 10e-6, 512);
    let bin = bin_width(&durations).map_err(e)?;
    let opts = SweepOptions::default();
    let mut det_worst: f64 = 0.0;
    let mut err_worst: f64 = 0.0;
    for s in Scheme::CCD {
        let cfg = drive(s, 3.6);
        let target = cfg.mod_strength / TAU;
        let ds = linspace(-0.3 * cfg.rabi, 0.3 * cfg.rabi, 13);
        let g = chevron_sweep(&cfg, &ds, &durations, &opts).map_err(e)?;
        for i in 0..ds.len() {
            det_worst = det_worst.max((dominant_frequency(&durations, g.row(i)).map_err(e)? - target).abs() / bin);
        }
        let cfg = drive(s, 3.3);
        let target = cfg.mod_strength / TAU;
        let es = linspace(-0.2 * cfg.rabi, 0.2 * cfg.rabi, 9);
        let g = rabi_error_sweep(&cfg, &es, &durations, &opts).map_err(e)?;
        for i in 0..es.len() {
            err_worst = err_worst.max((dominant_frequency(&durations, g.row(i)).map_err(e)? - target).abs() / bin);
        }
    }
    let cfg = drive(Scheme::Bare, 3.3);
    let es = linspace(-0.2 * cfg.rabi, 0.2 * cfg.rabi, 9);
    let g = rabi_error_sweep(&cfg, &es, &durations, &opts).map_err(e)?;
    let fs: Vec<f64> =
        (0..es.len()).map(|i| dominant_frequency(&durations, g.row(i))).collect::<Result<_, _>>().map_err(e)?;
    let mx = es.iter().sum::<f64>() / es.len() as f64;
    let my = fs.iter().sum::<f64>() / fs.len() as f64;
    let sxy: f64 = es.iter().zip(&fs).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = es.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx * TAU;
    let ok = det_worst <= 1.0 && err_worst <= 1.0 && (slope - 1.0).abs() <= 0.01;
    Ok((
        ok,
        format!(
            "max |f−ε_m/2π| in bins: detuning {det_worst:.2}, rabi error {err_worst:.2}; bare slope·2π = {slope:.5}"
        ),
    ))
}

fn c8() -> Outcome {
    let cfg = drive(Scheme::Cmccd, 2.2);
    let target = cfg.mod_strength / TAU;
    let t = linspace(0.0, 8e-6, 160);
    let mut detail = Vec::new();
    let mut ok = true;
    for kind in [DressedKind::CcdRabi, DressedKind::CcdRamsey] {
        let (x, y): (Vec<f64>, Vec<f64>) =
            dressed_sequence_experiment(kind, &cfg, &t, &rot()).map_err(e)?.into_iter().unzip();
        let fit = fit_decaying_sinusoid(&x, &y).map_err(e)?;
        let rel = (fit.frequency / target - 1.0).abs();
        ok &= rel <= 0.005;
        detail.push(format!("{} {:.2e}", kind.name(), rel));
    }
    let phis = linspace(0.0, 2.0 * TAU, 65);
    let y: Vec<f64> = dressed_sequence_experiment(DressedKind::TwoAxis, &cfg, &phis, &rot())
        .map_err(e)?
        .iter()
        .map(|p| p.1)
        .collect();
    let r2 = fit_cosine(&phis, &y, TAU).map_err(e)?.r_squared;
    ok &= r2 >= 0.999;
    Ok((ok, format!("relative frequency error {}; two-axis R² = {r2:.9}", detail.join(", "))))
}

fn rb(s: Scheme, delta_frac: f64, mode: RbMode) -> Result<f64, String> {
    let cfg = drive(s, 2.2);
    let opts = RbOptions { mode, seed: 7, static_detuning: delta_frac * cfg.rabi, ..RbOptions::default() };
    let r = randomized_benchmarking(&cfg, &opts).map_err(e)?;
    if !r.fit_ok {
        return Err(format!("{s}: RB fit failed"));
    }
    Ok(if mode == RbMode::IdealMatrices { r.f_c } else { r.f })
}

fn c9() -> Outcome {
    let ideal = rb(Scheme::Cmccd, 0.0, RbMode::IdealMatrices)?;
    let a = (ideal - 1.0).abs() <= 1e-12;
    let cm = rb(Scheme::Cmccd, 0.0, RbMode::Pulse)?;
    let b = cm >= 0.99999;
    let drop = |s| -> Result<f64, String> { Ok(rb(s, 0.0, RbMode::Pulse)? - rb(s, 0.05, RbMode::Pulse)?) };
    let bare = drop(Scheme::Bare)?;
    let mut c = true;
    let mut detail = vec![format!("bare={bare:.2e}")];
    for s in Scheme::CCD {
        let d = drop(s)?;
        c &= d < bare;
        detail.push(format!("{s}={d:.2e}"));
    }
    Ok((a && b && c, format!("ideal F_c={ideal}, CM F={cm:.8}, drop at δ=0.05Ω₀: {}", detail.join(" "))))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ccd-sim").chain(args.iter().copied());
    match ccd_sim::run(argv, &mut out, &mut err) {
        0 => Ok(out),
        code => Err(format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err))),
    }
}

fn c10() -> Outcome {
    let mut unitarity: f64 = 0.0;
    let mut norm: f64 = 0.0;
    let mut halving: f64 = 0.0;
    let psi0 = State::from_angles(1.1, 0.3);
    for rabi in [3.6, 3.3, 2.2] {
        for s in Scheme::ALL {
            let cfg = drive(s, rabi).with_detuning(0.05 * mhz(rabi));
            let frames: &[Frame] = if s == Scheme::Bare { &[Frame::First] } else { &[Frame::First, Frame::Second] };
            for &f in frames {
                let v = FrameView::new(&cfg, f).map_err(e)?;
                unitarity = unitarity.max(propagator_unitary(&v, 0.0, 10e-6, &rot()).map_err(e)?.unitarity_error());
                norm = norm.max((evolve(&v, &psi0, 0.0, 10e-6, &rot()).map_err(e)?.norm_sqr() - 1.0).abs());
                halving = halving.max(step_halving_difference(&v, &psi0, 0.0, 10e-6, &rot()).map_err(e)?);
            }
        }
    }
    let numerics = unitarity <= 1e-10 && norm <= 1e-10 && halving <= 1e-8;

    let chevron = [
        "chevron",
        "--scheme",
        "am",
        "--durations",
        "64",
        "--detuning-count",
        "9",
        "--noise-sigma-detuning-hz",
        "2e5",
        "--noise-samples",
        "6",
        "--seed",
        "11",
    ];
    let rb = [
        "rb",
        "--scheme",
        "pm",
        "--cliffords",
        "1,2,4,8",
        "--k",
        "5",
        "--noise-sigma-rabi-frac",
        "0.01",
        "--noise-samples",
        "3",
        "--seed",
        "5",
    ];
    let mut identical = true;
    for args in [&chevron[..], &rb[..]] {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "1"] {
            let mut a = args.to_vec();
            a.extend(["--threads", threads]);
            outputs.push(run_cli(&a)?);
        }
        identical &= outputs.windows(2).all(|w| w[0] == w[1]);
    }
    Ok((
        numerics && identical,
        format!(
            "unitarity {unitarity:.1e}, norm drift {norm:.1e}, step halving {halving:.1e}; byte-identical 1/4/1 threads: {identical}"
        ),
    ))
}

fn c11() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = usize::MAX;
    for s in Scheme::ALL {
        let rc_scheme = s.short_name();
        let cfg = drive(s, 3.6);
        let mut p = Program::new(cfg);
        p.gate(PI, carrier_phase_for_axis(FRAC_PI_2, &cfg)).map_err(e)?;
        p.pad_for_readout().map_err(e)?;
        let compiled = p.compile().map_err(e)?;
        let rate = format!("{:e}", 1.0001e4 / compiled.total_duration());
        let text = run_cli(&["iq-export", "--scheme", rc_scheme, "--sample-rate-hz", &rate])?;
        let ds = Dataset::from_csv(&String::from_utf8(text).map_err(e)?).map_err(e)?;
        let carrier: f64 = ds.meta_value("carrier_hz").ok_or("no carrier_hz")?.parse().map_err(e)?;
        let (t, i, q) = (&ds.axes[0].data, &ds.values[0].data, &ds.values[1].data);
        points = points.min(t.len());
        for k in 0..t.len() {
            let w = TAU * carrier * t[k];
            let demod = i[k] * w.cos() - q[k] * w.sin();
            worst = worst.max((demod - compiled.lab_drive_coefficient(t[k])).abs() / cfg.rabi);
        }
    }
    Ok((
        worst <= 1e-10 && points >= 10_000,
        format!("{points}+ samples per scheme, max relative deviation {worst:.1e}"),
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "counter-rotating cancellation", c1),
        (2, "exact frame equivalence", c2),
        (3, "first RWA against the lab frame", c3),
        (4, "bare chevron law", c4),
        (5, "Y_pi infidelity ordering", c5),
        (6, "trajectory marker spread", c6),
        (7, "flat-band robustness", c7),
        (8, "dressed sequence presets", c8),
        (9, "randomized benchmarking", c9),
        (10, "numerical hygiene and determinism", c10),
        (11, "I/Q round trip", c11),
    ];
    let mut unexpected = Vec::new();
    for (n, name, f) in criteria {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        let secs = start.elapsed().as_secs_f64();
        let tag = if passed { "PASS" } else { "FAIL" };
        let note = if !passed && KNOWN_RED.contains(&n) { " [known]" } else { "" };
        println!("{tag} {n:>2} {name}: {detail} ({secs:.1}s){note}");
        if !passed && !KNOWN_RED.contains(&n) {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
