//! Pulse sequences for the dressed qubit: gate pulses (θ_m = π/2, axis set
//! by φ_mw), idle pulses (θ_m = 0, a z rotation at rate ε_m) and readout
//! padding to the next multiple of 2π/Ω₀.
//!
//! All segments run on one global modulation clock. CCD programs are
//! simulated in the second rotating frame, bare programs in the first. The
//! second frame only depends on φ_mw and returns to ±I whenever Ω₀t is a
//! multiple of 2π, so a boundary where φ_mw changes, and the readout time,
//! must sit on that grid; boundaries that only change θ_m may fall anywhere
//! because the phase modulation is phase continuous (see [`lab_configs`]).

use std::fmt;

use crate::clifford::Primitive;
use crate::drive::{DriveConfig, Frame, IqSample};
use crate::error::{CcdError, Result};
use crate::propagator::{evolve, propagator_unitary, FrameView, IntegratorSpec};
use crate::qubit::{Operator, QubitState, UnitaryOp};
use crate::scalar::Real;

/// Tolerance, in Rabi periods, for boundary alignment. Raised to the scalar's
/// rounding level when that is coarser (f32).
pub const ALIGNMENT_TOLERANCE: f64 = 1e-9;

fn alignment_tolerance<T: Real>(cycles: T) -> T {
    let rounding = T::epsilon() * T::lit(64.0) * cycles.abs().max(T::one());
    rounding.max(T::lit(ALIGNMENT_TOLERANCE))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SegmentKind {
    Gate,
    Idle,
    ReadoutPad,
}

impl fmt::Display for SegmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentKind::Gate => "gate",
            SegmentKind::Idle => "idle",
            SegmentKind::ReadoutPad => "pad",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSegment<T> {
    pub kind: SegmentKind,
    pub duration: T,
    /// π/2 for gates, 0 for idle and padding.
    pub theta_m: T,
    /// Carrier phase; `None` for idle/pad segments, which keep the previous one.
    pub phi_mw: Option<T>,
    pub label: String,
}

/// Gate of rotation `angle` about the in-plane axis `φ_mw + π/2` of the
/// second frame (CCD), or about `φ_mw` in the first frame (bare drive).
pub fn gate_pulse<T: Real>(angle: T, phi_mw: T, cfg: &DriveConfig<T>) -> Result<PulseSegment<T>> {
    cfg.validate()?;
    if !(angle > T::zero()) || !angle.is_finite() {
        return Err(CcdError::Validation(format!("gate angle must be positive (got {angle})")));
    }
    let rate = if cfg.is_bare() {
        cfg.rabi
    } else {
        if !(cfg.mod_strength > T::zero()) {
            return Err(CcdError::InvalidDrive("gate pulses need ε_m > 0 to drive the second frame".into()));
        }
        cfg.mod_strength
    };
    Ok(PulseSegment {
        kind: SegmentKind::Gate,
        duration: angle / rate,
        theta_m: T::FRAC_PI_2(),
        phi_mw: Some(phi_mw),
        label: format!("gate({angle:.6}, φ={phi_mw:.6})"),
    })
}

/// Idle pulse: θ_m = 0, which makes the co-rotating term a pure σ_z generator.
pub fn idle_pulse<T: Real>(duration: T, _cfg: &DriveConfig<T>) -> Result<PulseSegment<T>> {
    if !(duration >= T::zero()) || !duration.is_finite() {
        return Err(CcdError::Validation(format!("idle duration must be ≥ 0 (got {duration})")));
    }
    Ok(PulseSegment {
        kind: SegmentKind::Idle,
        duration,
        theta_m: T::zero(),
        phi_mw: None,
        label: format!("idle({duration:e})"),
    })
}

/// Smallest `d ≥ 0` with `Ω₀(elapsed + d) ≡ 0 (mod 2π)`.
pub fn readout_pad_duration<T: Real>(elapsed: T, rabi: T) -> T {
    let period = T::TAU() / rabi;
    let cycles = elapsed / period;
    let frac = cycles - cycles.floor();
    let tol = alignment_tolerance(cycles);
    if frac <= tol || T::one() - frac <= tol {
        T::zero()
    } else {
        (T::one() - frac) * period
    }
}

/// Idle padding so the readout happens at a multiple of 2π/Ω₀, where the
/// second-frame and lab populations coincide.
pub fn readout_pad<T: Real>(elapsed: T, cfg: &DriveConfig<T>) -> Result<PulseSegment<T>> {
    cfg.validate()?;
    if !(elapsed >= T::zero()) {
        return Err(CcdError::Validation("elapsed time must be ≥ 0".into()));
    }
    let duration = readout_pad_duration(elapsed, cfg.rabi);
    Ok(PulseSegment {
        kind: SegmentKind::ReadoutPad,
        duration,
        theta_m: T::zero(),
        phi_mw: None,
        label: format!("pad({duration:e})"),
    })
}

/// Carrier phase realizing a logical rotation axis with azimuth `axis`: the
/// CCD gate axis sits at φ_mw + π/2, the bare drive axis at φ_mw.
pub fn carrier_phase_for_axis<T: Real>(axis: T, cfg: &DriveConfig<T>) -> T {
    if cfg.is_bare() {
        axis
    } else {
        axis - T::FRAC_PI_2()
    }
}

/// Segment for a primitive rotation; `I` is a zero-length gate.
pub fn primitive_pulse<T: Real>(p: Primitive, cfg: &DriveConfig<T>) -> Result<PulseSegment<T>> {
    let (axis, angle) = p.axis_angle::<T>();
    if angle == T::zero() {
        return Ok(PulseSegment {
            kind: SegmentKind::Gate,
            duration: T::zero(),
            theta_m: T::FRAC_PI_2(),
            phi_mw: None,
            label: p.name().to_string(),
        });
    }
    let mut phi = carrier_phase_for_axis(axis, cfg);
    if angle < T::zero() {
        phi = phi + T::PI();
    }
    let mut seg = gate_pulse(angle.abs(), phi, cfg)?;
    seg.label = p.name().to_string();
    Ok(seg)
}

/// `ε_m = Ω₀/(4k)` for a positive integer `k`, which puts every π/2 gate on
/// a whole number of modulation periods.
pub fn check_boundary_rule<T: Real>(cfg: &DriveConfig<T>) -> Result<u32> {
    cfg.validate()?;
    if cfg.is_bare() {
        return Ok(0);
    }
    if !(cfg.mod_strength > T::zero()) {
        return Err(CcdError::InvalidDrive("ε_m must be positive for gate sequences".into()));
    }
    let k = cfg.rabi / (T::lit(4.0) * cfg.mod_strength);
    let kr = k.round();
    if kr >= T::one() && (k - kr).abs() <= T::lit(1e-9) * kr {
        Ok(kr.to_u32().unwrap_or(0))
    } else {
        Err(CcdError::InvalidDrive(format!(
            "gate sequences require ε_m = Ω₀/(4k) for a positive integer k (Ω₀/(4ε_m) = {k})"
        )))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseProgram<T> {
    pub cfg: DriveConfig<T>,
    pub segments: Vec<PulseSegment<T>>,
}

impl<T: Real> PulseProgram<T> {
    pub fn new(cfg: DriveConfig<T>) -> Self {
        Self { cfg, segments: Vec::new() }
    }

    pub fn push(&mut self, seg: PulseSegment<T>) -> &mut Self {
        self.segments.push(seg);
        self
    }

    pub fn gate(&mut self, angle: T, phi_mw: T) -> Result<&mut Self> {
        let s = gate_pulse(angle, phi_mw, &self.cfg)?;
        Ok(self.push(s))
    }

    pub fn idle(&mut self, duration: T) -> Result<&mut Self> {
        let s = idle_pulse(duration, &self.cfg)?;
        Ok(self.push(s))
    }

    pub fn primitive(&mut self, p: Primitive) -> Result<&mut Self> {
        let s = primitive_pulse(p, &self.cfg)?;
        Ok(self.push(s))
    }

    /// Appends the readout pad for the current total duration.
    pub fn pad_for_readout(&mut self) -> Result<&mut Self> {
        let s = readout_pad(self.total_duration(), &self.cfg)?;
        Ok(self.push(s))
    }

    pub fn total_duration(&self) -> T {
        self.segments.iter().fold(T::zero(), |acc, s| acc + s.duration)
    }

    /// Parses a text program: one directive per line, `#` starts a comment.
    ///
    /// ```text
    /// gate <angle> <phi_mw>   # angles accept `pi` forms: pi/2, -pi, 3pi/2
    /// idle <duration_s>
    /// pad
    /// X90 | -X90 | Y90 | -Y90 | X180 | Y180 | I
    /// ```
    pub fn parse(text: &str, cfg: DriveConfig<T>) -> Result<Self> {
        let mut prog = Self::new(cfg);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CcdError::Validation(format!("program line {}: {msg}", n + 1));
            let fields: Vec<&str> =
                line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            match fields[0].to_ascii_lowercase().as_str() {
                "gate" => {
                    if fields.len() != 3 {
                        return Err(at("expected `gate <angle> <phi_mw>`".into()));
                    }
                    let angle = parse_angle::<T>(fields[1]).ok_or_else(|| at(format!("bad angle `{}`", fields[1])))?;
                    let phi = parse_angle::<T>(fields[2]).ok_or_else(|| at(format!("bad phase `{}`", fields[2])))?;
                    prog.gate(angle, phi).map_err(|e| at(e.to_string()))?;
                }
                "idle" => {
                    if fields.len() != 2 {
                        return Err(at("expected `idle <duration_s>`".into()));
                    }
                    let d = fields[1].parse::<f64>().map_err(|_| at(format!("bad duration `{}`", fields[1])))?;
                    prog.idle(T::lit(d)).map_err(|e| at(e.to_string()))?;
                }
                "pad" => {
                    if fields.len() != 1 {
                        return Err(at("`pad` takes no arguments".into()));
                    }
                    prog.pad_for_readout().map_err(|e| at(e.to_string()))?;
                }
                other => match Primitive::parse(other) {
                    Some(p) if fields.len() == 1 => {
                        prog.primitive(p).map_err(|e| at(e.to_string()))?;
                    }
                    _ => return Err(at(format!("unknown directive `{}`", fields[0]))),
                },
            }
        }
        Ok(prog)
    }

    pub fn compile(&self) -> Result<CompiledProgram<T>> {
        compile(self)
    }
}

/// Parses a real number or a multiple of π such as `pi/2`, `-pi`, `3pi/4`, `0.5pi`.
pub fn parse_angle<T: Real>(s: &str) -> Option<T> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(T::lit(v));
    }
    let lower = s.to_ascii_lowercase();
    let idx = lower.find("pi")?;
    let (coef, rest) = lower.split_at(idx);
    let rest = &rest[2..];
    let coef = match coef.trim_end_matches('*') {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    let denom = if rest.is_empty() { 1.0 } else { rest.strip_prefix('/')?.parse::<f64>().ok()? };
    Some(T::lit(coef * std::f64::consts::PI / denom))
}

/// One piece of the compiled timeline: a fixed drive configuration over `[start, end)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece<T> {
    pub start: T,
    pub end: T,
    pub cfg: DriveConfig<T>,
    pub kind: SegmentKind,
    pub label: String,
}

/// Piecewise-in-time drive description on the global modulation clock.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledProgram<T> {
    pieces: Vec<Piece<T>>,
    frame: Frame,
    total: T,
    base: DriveConfig<T>,
}

fn is_aligned<T: Real>(t: T, rabi: T) -> bool {
    let cycles = rabi * t / T::TAU();
    (cycles - cycles.round()).abs() <= alignment_tolerance(cycles)
}

/// Builds the timeline and checks frame bookkeeping. CCD programs must place
/// every carrier-phase change and their end on `Ω₀t ≡ 0 (mod 2π)`.
pub fn compile<T: Real>(program: &PulseProgram<T>) -> Result<CompiledProgram<T>> {
    let base = program.cfg;
    base.validate()?;
    let ccd = !base.is_bare();
    let frame = if ccd { Frame::Second } else { Frame::First };
    let mut pieces = Vec::new();
    let mut t = T::zero();
    let mut phi = base.mw_phase;
    for (index, seg) in program.segments.iter().enumerate() {
        if !(seg.duration >= T::zero()) || !seg.duration.is_finite() {
            return Err(CcdError::Compile {
                index,
                label: seg.label.clone(),
                message: "duration must be finite and ≥ 0".into(),
            });
        }
        let new_phi = seg.phi_mw.unwrap_or(phi);
        if seg.duration == T::zero() {
            continue;
        }
        if ccd && new_phi != phi && !pieces.is_empty() && !is_aligned(t, base.rabi) {
            return Err(CcdError::Compile {
                index,
                label: seg.label.clone(),
                message: format!(
                    "carrier phase changes at t = {t:e} s, which is not a multiple of 2π/Ω₀; \
                     the second rotating frame would be discontinuous"
                ),
            });
        }
        phi = new_phi;
        let cfg = base.with_mod_phase(seg.theta_m).with_mw_phase(phi);
        let end = t + seg.duration;
        pieces.push(Piece { start: t, end, cfg, kind: seg.kind, label: seg.label.clone() });
        t = end;
    }
    if ccd && !is_aligned(t, base.rabi) {
        let index = program.segments.len().saturating_sub(1);
        let label = program.segments.last().map(|s| s.label.clone()).unwrap_or_default();
        return Err(CcdError::Compile {
            index,
            label,
            message: format!("program ends at t = {t:e} s, off the 2π/Ω₀ readout grid; append a readout pad"),
        });
    }
    Ok(CompiledProgram { pieces, frame, total: t, base })
}

/// Lab-frame view of each piece. The phase modulation is phase continuous:
/// its excursion is the running integral of `2α_Pε_m cos(Ω₀t − θ_m)` over
/// all earlier pieces, so a θ_m switch changes the modulation without a jump
/// in the carrier phase. Each piece's carrier phase is shifted so that its
/// own excursion, measured from t = 0, continues the accumulated one.
fn lab_configs<T: Real>(pieces: &[Piece<T>]) -> Vec<DriveConfig<T>> {
    let mut accumulated = T::zero();
    let mut out = Vec::with_capacity(pieces.len());
    for p in pieces {
        let c = p.cfg;
        let k = T::lit(2.0) * c.alpha_p * c.mod_strength / c.rabi;
        let at = |t: T| (c.rabi * t - c.mod_phase).sin();
        let shift = k * (c.mod_phase.sin() + at(p.start)) - accumulated;
        out.push(c.with_mw_phase(c.mw_phase + shift));
        accumulated = accumulated + k * (at(p.end) - at(p.start));
    }
    out
}

impl<T: Real> CompiledProgram<T> {
    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    /// Frame the program is simulated in.
    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn total_duration(&self) -> T {
        self.total
    }

    /// Drive configuration active at time `t` (the last piece's beyond the end).
    pub fn drive_at(&self, t: T) -> DriveConfig<T> {
        self.pieces
            .iter()
            .find(|p| t >= p.start && t < p.end)
            .or(self.pieces.last())
            .map(|p| p.cfg)
            .unwrap_or(self.base)
    }

    /// Applies the same static errors to every piece.
    pub fn with_errors(&self, detuning: T, rabi_error: T) -> Self {
        let mut c = self.clone();
        for p in &mut c.pieces {
            p.cfg = p.cfg.with_detuning(detuning).with_rabi_error(rabi_error);
        }
        c.base = c.base.with_detuning(detuning).with_rabi_error(rabi_error);
        c
    }

    fn frame_configs(&self, frame: Frame) -> Vec<DriveConfig<T>> {
        match frame {
            Frame::Lab => lab_configs(&self.pieces),
            _ => self.pieces.iter().map(|p| p.cfg).collect(),
        }
    }

    fn piece_index(&self, t: T) -> Option<usize> {
        self.pieces.iter().position(|p| t >= p.start && t < p.end).or_else(|| self.pieces.len().checked_sub(1))
    }

    /// σ_x coefficient of the lab Hamiltonian at `t`, phase continuous across pieces.
    pub fn lab_drive_coefficient(&self, t: T) -> T {
        match self.piece_index(t) {
            Some(i) => lab_configs(&self.pieces)[i].lab_drive_coefficient(t),
            None => T::zero(),
        }
    }

    /// Baseband envelopes on a zero-phase carrier: `I cos(ω_mw t) − Q sin(ω_mw t)`
    /// equals [`Self::lab_drive_coefficient`]. Carrier phases are folded into (I, Q).
    pub fn iq_samples(&self, times: &[T]) -> Vec<IqSample<T>> {
        let labs = lab_configs(&self.pieces);
        times
            .iter()
            .map(|&t| match self.piece_index(t) {
                Some(i) => {
                    let c = labs[i];
                    let s = c.iq_baseband(t);
                    let (sp, cp) = c.mw_phase.sin_cos();
                    IqSample { t, i: s.i * cp - s.q * sp, q: s.i * sp + s.q * cp }
                }
                None => IqSample { t, i: T::zero(), q: T::zero() },
            })
            .collect()
    }

    /// Final state in the program's simulation frame.
    pub fn simulate(&self, psi0: &QubitState<T>, spec: &IntegratorSpec<T>) -> Result<QubitState<T>> {
        self.simulate_in(self.frame, psi0, spec)
    }

    /// Final state propagated piecewise in an explicit frame. For CCD programs
    /// the first-frame result differs from the second-frame one only by the
    /// readout-time frame unitary, which is ±I after compilation.
    pub fn simulate_in(&self, frame: Frame, psi0: &QubitState<T>, spec: &IntegratorSpec<T>) -> Result<QubitState<T>> {
        let mut psi = *psi0;
        for (p, cfg) in self.pieces.iter().zip(self.frame_configs(frame)) {
            let view = FrameView::new(&cfg, frame)?;
            psi = evolve(&view, &psi, p.start, p.end, spec)?;
        }
        Ok(psi)
    }

    /// Whole-program propagator in the simulation frame.
    pub fn unitary(&self, spec: &IntegratorSpec<T>) -> Result<UnitaryOp<T>> {
        self.unitary_in(self.frame, spec)
    }

    pub fn unitary_in(&self, frame: Frame, spec: &IntegratorSpec<T>) -> Result<UnitaryOp<T>> {
        let mut u = Operator::identity();
        for (p, cfg) in self.pieces.iter().zip(self.frame_configs(frame)) {
            let view = FrameView::new(&cfg, frame)?;
            u = propagator_unitary(&view, p.start, p.end, spec)? * u;
        }
        Ok(u)
    }

    /// Spin-up fraction `|⟨1|ψ⟩|²` at readout, starting from `|0⟩`.
    pub fn spin_up_fraction(&self, spec: &IntegratorSpec<T>) -> Result<T> {
        Ok(self.simulate(&QubitState::ground(), spec)?.excited_population())
    }
}
