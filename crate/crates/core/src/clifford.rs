//! The 24-element single-qubit Clifford group built from the primitive pulses
//! {I, ±X90, ±Y90, X180, Y180}, with the standard decomposition table whose
//! mean length is 1.875 primitives per Clifford.

use std::fmt;

use crate::error::{CcdError, Result};
use crate::qubit::{Hamiltonian, Operator, QubitState, UnitaryOp};
use crate::scalar::Real;

/// Primitive rotation. X and Y refer to the logical axes of the frame in
/// which gates act (the second rotating frame for CCD, the first for bare).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Primitive {
    I,
    X90,
    Xm90,
    Y90,
    Ym90,
    X180,
    Y180,
}

impl Primitive {
    pub const ALL: [Primitive; 7] = [
        Primitive::I,
        Primitive::X90,
        Primitive::Xm90,
        Primitive::Y90,
        Primitive::Ym90,
        Primitive::X180,
        Primitive::Y180,
    ];

    /// `(azimuth of the logical rotation axis, signed rotation angle)`.
    pub fn axis_angle<T: Real>(self) -> (T, T) {
        let h = T::FRAC_PI_2();
        let p = T::PI();
        match self {
            Primitive::I => (T::zero(), T::zero()),
            Primitive::X90 => (T::zero(), h),
            Primitive::Xm90 => (T::zero(), -h),
            Primitive::Y90 => (h, h),
            Primitive::Ym90 => (h, -h),
            Primitive::X180 => (T::zero(), p),
            Primitive::Y180 => (h, p),
        }
    }

    /// Ideal rotation `exp(−i(θ/2)σ_a)`.
    pub fn ideal_matrix<T: Real>(self) -> UnitaryOp<T> {
        let (axis, angle) = self.axis_angle::<T>();
        Hamiltonian::axis(axis, T::lit(0.5)).exp_step(angle)
    }

    pub fn name(self) -> &'static str {
        match self {
            Primitive::I => "I",
            Primitive::X90 => "X90",
            Primitive::Xm90 => "-X90",
            Primitive::Y90 => "Y90",
            Primitive::Ym90 => "-Y90",
            Primitive::X180 => "X180",
            Primitive::Y180 => "Y180",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

use Primitive::*;

/// Decompositions, listed in application order.
const TABLE: [&[Primitive]; 24] = [
    // Paulis
    &[I],
    &[X180],
    &[Y180],
    &[Y180, X180],
    // 2π/3 rotations
    &[X90, Y90],
    &[X90, Ym90],
    &[Xm90, Y90],
    &[Xm90, Ym90],
    &[Y90, X90],
    &[Y90, Xm90],
    &[Ym90, X90],
    &[Ym90, Xm90],
    // π/2 rotations
    &[X90],
    &[Xm90],
    &[Y90],
    &[Ym90],
    &[Xm90, Y90, X90],
    &[Xm90, Ym90, X90],
    // Hadamard-like
    &[X180, Y90],
    &[X180, Ym90],
    &[Y180, X90],
    &[Y180, Xm90],
    &[X90, Y90, X90],
    &[Xm90, Y90, Xm90],
];

/// Mean number of primitives per Clifford, the conversion factor between
/// Clifford and single-gate fidelity.
pub const MEAN_PRIMITIVES_PER_CLIFFORD: f64 = 1.875;

#[derive(Clone, Debug, PartialEq)]
pub struct CliffordGate<T> {
    pub index: usize,
    pub decomposition: Vec<Primitive>,
    pub matrix: UnitaryOp<T>,
}

/// Which basis state the recovery gate should leave the qubit in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RecoveryTarget {
    /// `|1⟩` (spin-up): the net sequence is an X180.
    Up,
    /// `|0⟩` (spin-down, the initial state): the net sequence is the identity.
    Down,
}

/// The group with its multiplication table.
#[derive(Clone, Debug)]
pub struct CliffordTable<T> {
    gates: Vec<CliffordGate<T>>,
    /// `compose[a][b]` = index of `C_b · C_a` (apply a, then b).
    compose: [[u8; 24]; 24],
}

fn compose_primitives<T: Real>(seq: &[Primitive]) -> UnitaryOp<T> {
    seq.iter().fold(Operator::identity(), |acc, p| p.ideal_matrix::<T>() * acc)
}

impl<T: Real> CliffordTable<T> {
    pub fn new() -> Result<Self> {
        let gates: Vec<CliffordGate<T>> = TABLE
            .iter()
            .enumerate()
            .map(|(index, seq)| CliffordGate { index, decomposition: seq.to_vec(), matrix: compose_primitives(seq) })
            .collect();
        let mut compose = [[0u8; 24]; 24];
        for a in 0..24 {
            for b in 0..24 {
                let m = gates[b].matrix * gates[a].matrix;
                let idx = find_index(&gates, &m).ok_or_else(|| {
                    CcdError::Consistency(format!("product of Cliffords {a} and {b} is not in the table"))
                })?;
                compose[a][b] = idx as u8;
            }
        }
        Ok(Self { gates, compose })
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate(&self, index: usize) -> Result<&CliffordGate<T>> {
        self.gates
            .get(index)
            .ok_or_else(|| CcdError::Validation(format!("Clifford index {index} out of range [0, 24)")))
    }

    pub fn gates(&self) -> &[CliffordGate<T>] {
        &self.gates
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    /// Index of `C_second · C_first`.
    pub fn compose(&self, first: usize, second: usize) -> usize {
        self.compose[first][second] as usize
    }

    /// Index of the group element equal (up to phase) to `m`.
    pub fn find(&self, m: &UnitaryOp<T>) -> Option<usize> {
        find_index(&self.gates, m)
    }

    /// Index of the product of a sequence of Clifford indices applied in order.
    pub fn sequence_product(&self, indices: &[usize]) -> usize {
        indices.iter().fold(self.identity_index(), |acc, &i| self.compose(acc, i))
    }

    /// Recovery element `R` so that `R · C_M ⋯ C_1` is the identity (target
    /// [`RecoveryTarget::Down`]) or X180 (target [`RecoveryTarget::Up`]).
    pub fn recovery_index(&self, applied: &[usize], target: RecoveryTarget) -> Result<usize> {
        if applied.is_empty() {
            return Err(CcdError::Validation("recovery requires at least one applied Clifford".into()));
        }
        let net = self.sequence_product(applied);
        let wanted = match target {
            RecoveryTarget::Down => self.identity_index(),
            RecoveryTarget::Up => 1,
        };
        (0..24)
            .find(|&r| self.compose(net, r) == wanted)
            .ok_or_else(|| CcdError::Consistency("no recovery Clifford found; group closure violated".into()))
    }
}

fn find_index<T: Real>(gates: &[CliffordGate<T>], m: &UnitaryOp<T>) -> Option<usize> {
    let tol = T::lit(1e-6);
    gates.iter().position(|g| g.matrix.equals_up_to_phase(m, tol))
}

/// Clifford group element by index.
pub fn clifford<T: Real>(index: usize) -> Result<CliffordGate<T>> {
    if index >= 24 {
        return Err(CcdError::Validation(format!("Clifford index {index} out of range [0, 24)")));
    }
    let seq = TABLE[index];
    Ok(CliffordGate { index, decomposition: seq.to_vec(), matrix: compose_primitives(seq) })
}

/// Recovery gate for a list of applied Cliffords (matched by their ideal matrices).
pub fn recovery_clifford<T: Real>(applied: &[CliffordGate<T>], target: RecoveryTarget) -> Result<CliffordGate<T>> {
    let table = CliffordTable::<T>::new()?;
    let mut indices = Vec::with_capacity(applied.len());
    for g in applied {
        let idx = table
            .find(&g.matrix)
            .ok_or_else(|| CcdError::Consistency(format!("gate {} is not a Clifford", g.index)))?;
        indices.push(idx);
    }
    let r = table.recovery_index(&indices, target)?;
    Ok(table.gate(r)?.clone())
}

/// `|⟨target|U|0⟩|²` for the ideal matrix `U`.
pub fn ideal_target_population<T: Real>(u: &UnitaryOp<T>, target: RecoveryTarget) -> T {
    let out = u.apply(&QubitState::ground());
    match target {
        RecoveryTarget::Up => out.excited_population(),
        RecoveryTarget::Down => out.ground_population(),
    }
}
