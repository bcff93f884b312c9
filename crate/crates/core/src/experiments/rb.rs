//! Single-qubit randomized benchmarking with the up/down recovery difference.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::noise::{NoiseSpec, ShotErrors};
use crate::clifford::{CliffordTable, Primitive, RecoveryTarget, MEAN_PRIMITIVES_PER_CLIFFORD};
use crate::drive::DriveConfig;
use crate::error::{CcdError, Result};
use crate::propagator::IntegratorSpec;
use crate::pulse::{check_boundary_rule, PulseProgram};
use crate::qubit::{Operator, QubitState, UnitaryOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum RbMode {
    /// Compiled pulse programs propagated under the drive Hamiltonian.
    #[default]
    Pulse,
    /// Ideal Clifford matrices; a self-consistency check of the RB machinery.
    IdealMatrices,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbOptions {
    /// Sequence lengths M, positive and strictly increasing.
    pub lengths: Vec<usize>,
    /// Random sequences per length.
    pub k: usize,
    pub seed: u64,
    /// Shot-to-shot noise; each sequence is averaged over `noise.samples` shots.
    pub noise: NoiseSpec,
    /// Static detuning (rad/s) applied to every shot.
    pub static_detuning: f64,
    /// Static Rabi error (rad/s) applied to every shot.
    pub static_rabi_error: f64,
    pub mode: RbMode,
    pub integrator: IntegratorSpec<f64>,
}

impl Default for RbOptions {
    fn default() -> Self {
        Self {
            lengths: vec![1, 2, 4, 8, 16, 32, 64],
            k: 15,
            seed: 0,
            noise: NoiseSpec::default(),
            static_detuning: 0.0,
            static_rabi_error: 0.0,
            mode: RbMode::Pulse,
            integrator: IntegratorSpec::rotating_default(),
        }
    }
}

impl RbOptions {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.lengths[0] == 0 || self.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CcdError::Validation("RB lengths must be positive and strictly increasing".into()));
        }
        if self.k == 0 {
            return Err(CcdError::Validation("RB needs K ≥ 1".into()));
        }
        if !(self.static_detuning.is_finite() && self.static_rabi_error.is_finite()) {
            return Err(CcdError::Validation("static errors must be finite".into()));
        }
        self.noise.validate()?;
        self.integrator.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RbResult {
    pub lengths: Vec<usize>,
    /// Mean of `P↑(recover to |1⟩) − P↑(recover to |0⟩)` per length.
    pub signal: Vec<f64>,
    /// Standard error of the mean over the K sequences per length.
    pub signal_std_err: Vec<f64>,
    pub k: usize,
    /// Fitted amplitude `A` of `A·(2F_c − 1)^M`.
    pub amplitude: f64,
    /// Average Clifford fidelity, in [0, 1].
    pub f_c: f64,
    /// Average single-gate fidelity `1 − (1 − F_c)/1.875`.
    pub f: f64,
    /// RMS of the fit residuals.
    pub fit_residual: f64,
    pub fit_ok: bool,
    pub warnings: Vec<String>,
}

/// `1 − (1 − F_c)/1.875`.
pub fn gate_fidelity(f_c: f64) -> f64 {
    1.0 - (1.0 - f_c) / MEAN_PRIMITIVES_PER_CLIFFORD
}

/// Fidelities divided by their maximum, one of the two normalizations reported
/// alongside the raw values.
pub fn max_normalized(fidelities: &[f64]) -> Vec<f64> {
    let max = fidelities.iter().cloned().fold(f64::MIN, f64::max);
    fidelities.iter().map(|f| f / max).collect()
}

/// Clifford index draw for sequence `k` of the `m_index`-th length.
pub fn draw_sequence(seed: u64, m_index: usize, k: usize, length: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((m_index as u64) << 32) | k as u64);
    (0..length).map(|_| rng.random_range(0..24)).collect()
}

/// Unitaries of the primitive gates for one drive configuration. Each
/// primitive starts on the 2π/Ω₀ grid (CCD) or is time independent (bare),
/// so one propagation per primitive serves every position in a sequence.
pub struct PrimitiveCache {
    unitaries: HashMap<Primitive, UnitaryOp<f64>>,
}

impl PrimitiveCache {
    pub fn new(cfg: &DriveConfig<f64>, mode: RbMode, spec: &IntegratorSpec<f64>) -> Result<Self> {
        let mut unitaries = HashMap::new();
        for p in Primitive::ALL {
            let u = match mode {
                RbMode::IdealMatrices => p.ideal_matrix(),
                RbMode::Pulse => {
                    let mut prog = PulseProgram::new(*cfg);
                    prog.primitive(p)?;
                    prog.compile()?.unitary(spec)?
                }
            };
            unitaries.insert(p, u);
        }
        Ok(Self { unitaries })
    }

    pub fn get(&self, p: Primitive) -> &UnitaryOp<f64> {
        &self.unitaries[&p]
    }

    pub fn sequence_unitary(&self, table: &CliffordTable<f64>, cliffords: &[usize]) -> UnitaryOp<f64> {
        let mut u = Operator::identity();
        for &c in cliffords {
            for p in &table.gates()[c].decomposition {
                u = *self.get(*p) * u;
            }
        }
        u
    }
}

/// Up/down recovery difference for one Clifford sequence under fixed errors.
pub fn sequence_signal(table: &CliffordTable<f64>, cache: &PrimitiveCache, cliffords: &[usize]) -> Result<f64> {
    let body = cache.sequence_unitary(table, cliffords);
    let mut pops = [0.0; 2];
    for (slot, target) in [RecoveryTarget::Up, RecoveryTarget::Down].into_iter().enumerate() {
        let r = table.recovery_index(cliffords, target)?;
        let u = cache.sequence_unitary(table, &[r]) * body;
        pops[slot] = u.apply(&QubitState::ground()).excited_population();
    }
    Ok(pops[0] - pops[1])
}

fn shot_config(cfg: &DriveConfig<f64>, opts: &RbOptions, e: ShotErrors) -> DriveConfig<f64> {
    cfg.with_detuning(opts.static_detuning + e.detuning)
        .with_rabi_error(opts.static_rabi_error + e.rabi_error_frac * cfg.rabi)
}

/// Fit of `A·p^M` by log-linear regression on the positive points, refined by
/// Gauss–Newton on all points. Returns `(A, p, rms residual, ok)`.
pub fn fit_rb_decay(lengths: &[usize], signal: &[f64]) -> (f64, f64, f64, bool) {
    let pts: Vec<(f64, f64)> =
        lengths.iter().zip(signal).filter(|(_, s)| **s > 0.0).map(|(m, s)| (*m as f64, s.ln())).collect();
    let (mut a, mut p) = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
        let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        ((my - slope * mx).exp(), slope.exp())
    } else if let Some(q) = pts.first() {
        (1.0, (q.1 / q.0).exp())
    } else {
        return (0.0, 0.0, f64::NAN, false);
    };
    let resid =
        |a: f64, p: f64| -> f64 { lengths.iter().zip(signal).map(|(m, s)| (a * p.powi(*m as i32) - s).powi(2)).sum() };
    let mut current = resid(a, p);
    for _ in 0..50 {
        // normal equations for (δa, δp)
        let (mut h11, mut h12, mut h22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (m, s) in lengths.iter().zip(signal) {
            let m = *m as i32;
            let pm = p.powi(m);
            let da = pm;
            let dp = a * m as f64 * p.powi(m - 1);
            let r = a * pm - s;
            h11 += da * da;
            h12 += da * dp;
            h22 += dp * dp;
            g1 += da * r;
            g2 += dp * r;
        }
        let det = h11 * h22 - h12 * h12;
        if det.abs() < 1e-300 {
            break;
        }
        let step_a = -(h22 * g1 - h12 * g2) / det;
        let step_p = -(h11 * g2 - h12 * g1) / det;
        let (na, np) = (a + step_a, (p + step_p).clamp(-1.0, 1.0));
        let c = resid(na, np);
        if c < current {
            let done = (current - c) <= 1e-16 * current.max(1e-300);
            a = na;
            p = np;
            current = c;
            if done {
                break;
            }
        } else {
            break;
        }
    }
    let rms = (current / lengths.len() as f64).sqrt();
    (a, p, rms, a.is_finite() && p.is_finite())
}

/// Runs the benchmark. Sequences are drawn per (length, k) from a seed-keyed
/// stream; each is simulated with both recovery targets and averaged over the
/// noise shots.
pub fn randomized_benchmarking(cfg: &DriveConfig<f64>, opts: &RbOptions) -> Result<RbResult> {
    cfg.validate()?;
    opts.validate()?;
    if opts.mode == RbMode::Pulse {
        check_boundary_rule(cfg)?;
    }
    let table = CliffordTable::<f64>::new()?;
    let noiseless = opts.noise.is_noiseless();
    let shots = if noiseless { 1 } else { opts.noise.samples };
    let shared = if noiseless {
        Some(PrimitiveCache::new(&shot_config(cfg, opts, ShotErrors::default()), opts.mode, &opts.integrator)?)
    } else {
        None
    };
    let work: Vec<(usize, usize)> = (0..opts.lengths.len()).flat_map(|mi| (0..opts.k).map(move |k| (mi, k))).collect();
    let per_sequence = work
        .par_iter()
        .map(|&(mi, k)| {
            let seq = draw_sequence(opts.seed, mi, k, opts.lengths[mi]);
            let mut total = 0.0;
            for shot in 0..shots {
                let value = match &shared {
                    Some(cache) => sequence_signal(&table, cache, &seq)?,
                    None => {
                        let e = opts.noise.draw(((mi as u64) << 32) | k as u64, shot as u64);
                        let cache = PrimitiveCache::new(&shot_config(cfg, opts, e), opts.mode, &opts.integrator)?;
                        sequence_signal(&table, &cache, &seq)?
                    }
                };
                total += value;
            }
            Ok(total / shots as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut signal = Vec::with_capacity(opts.lengths.len());
    let mut std_err = Vec::with_capacity(opts.lengths.len());
    for mi in 0..opts.lengths.len() {
        let vals = &per_sequence[mi * opts.k..(mi + 1) * opts.k];
        let mean = vals.iter().sum::<f64>() / opts.k as f64;
        let se = if opts.k > 1 {
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (opts.k - 1) as f64;
            (var / opts.k as f64).sqrt()
        } else {
            0.0
        };
        signal.push(mean);
        std_err.push(se);
    }
    let (amplitude, p, fit_residual, fit_ok) = fit_rb_decay(&opts.lengths, &signal);
    let f_c = ((1.0 + p) / 2.0).clamp(0.0, 1.0);
    let mut warnings = Vec::new();
    let last = signal.len() - 1;
    if signal[last].abs() < 3.0 * std_err[last] {
        warnings.push(format!(
            "signal at M = {} ({:.3e}) is below 3× its standard error ({:.3e}); increase K or reduce M",
            opts.lengths[last], signal[last], std_err[last]
        ));
    }
    if !fit_ok {
        warnings.push("RB fit failed; F_c is not meaningful".into());
    }
    Ok(RbResult {
        lengths: opts.lengths.clone(),
        signal,
        signal_std_err: std_err,
        k: opts.k,
        amplitude,
        f_c,
        f: gate_fidelity(f_c),
        fit_residual,
        fit_ok,
        warnings,
    })
}
