//! SU(2) primitives: pure qubit states, 2x2 operators, traceless Hamiltonians
//! in Pauli-vector form, Bloch vectors and state fidelity.
//!
//! Basis convention: `|0⟩` is the initial (ground) state and `|1⟩` the
//! excited one; the "spin-up fraction" reported by the experiments is
//! `|⟨1|ψ⟩|²`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{CcdError, Result};
use crate::scalar::Real;

/// Normalized two-component pure state `a₀|0⟩ + a₁|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitState<T> {
    amps: [Complex<T>; 2],
}

impl<T: Real> QubitState<T> {
    /// Builds a state from raw amplitudes, rejecting anything that is not
    /// normalized within [`Real::normalization_tolerance`].
    pub fn new(a0: Complex<T>, a1: Complex<T>) -> Result<Self> {
        let s = Self { amps: [a0, a1] };
        s.check_normalized()?;
        Ok(s)
    }

    /// Builds a state and rescales it to unit norm. Fails on the zero vector.
    pub fn normalized(a0: Complex<T>, a1: Complex<T>) -> Result<Self> {
        let n = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(CcdError::Validation("cannot normalize a zero or non-finite state".into()));
        }
        Ok(Self { amps: [a0 / n, a1 / n] })
    }

    pub(crate) fn from_amps_unchecked(a0: Complex<T>, a1: Complex<T>) -> Self {
        Self { amps: [a0, a1] }
    }

    pub fn ground() -> Self {
        Self::from_amps_unchecked(Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()))
    }

    pub fn excited() -> Self {
        Self::from_amps_unchecked(Complex::new(T::zero(), T::zero()), Complex::new(T::one(), T::zero()))
    }

    /// `(|0⟩ + e^{iφ}|1⟩)/√2`, the equatorial state with azimuth `φ`.
    pub fn equator(phi: T) -> Self {
        let h = T::FRAC_1_SQRT_2();
        Self::from_amps_unchecked(Complex::new(h, T::zero()), Complex::from_polar(h, phi))
    }

    /// State with the given polar angle `θ` and azimuth `φ` on the Bloch sphere.
    pub fn from_angles(theta: T, phi: T) -> Self {
        let half = theta / T::lit(2.0);
        Self::from_amps_unchecked(Complex::new(half.cos(), T::zero()), Complex::from_polar(half.sin(), phi))
    }

    #[inline]
    pub fn amplitudes(&self) -> [Complex<T>; 2] {
        self.amps
    }

    #[inline]
    pub fn norm_sqr(&self) -> T {
        self.amps[0].norm_sqr() + self.amps[1].norm_sqr()
    }

    /// Population of `|1⟩`.
    #[inline]
    pub fn excited_population(&self) -> T {
        self.amps[1].norm_sqr()
    }

    /// Population of `|0⟩`.
    #[inline]
    pub fn ground_population(&self) -> T {
        self.amps[0].norm_sqr()
    }

    /// `⟨other|self⟩`.
    pub fn overlap(&self, other: &Self) -> Complex<T> {
        other.amps[0].conj() * self.amps[0] + other.amps[1].conj() * self.amps[1]
    }

    pub fn check_normalized(&self) -> Result<()> {
        let drift = (self.norm_sqr() - T::one()).abs();
        if drift > T::normalization_tolerance() || !drift.is_finite() {
            return Err(CcdError::Validation(format!("state is not normalized (|ψ|² − 1 = {drift:e})")));
        }
        Ok(())
    }

    pub(crate) fn renormalized(self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self::from_amps_unchecked(self.amps[0] / n, self.amps[1] / n)
    }

    /// Euclidean distance between amplitude vectors (phase sensitive).
    pub fn distance(&self, other: &Self) -> T {
        ((self.amps[0] - other.amps[0]).norm_sqr() + (self.amps[1] - other.amps[1]).norm_sqr()).sqrt()
    }

    pub fn with_global_phase(&self, gamma: T) -> Self {
        let p = Complex::from_polar(T::one(), gamma);
        Self::from_amps_unchecked(self.amps[0] * p, self.amps[1] * p)
    }
}

/// General 2x2 complex operator, row-major. Unitary propagators and frame
/// transformations use this type; see [`UnitaryOp`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator<T> {
    pub m: [[Complex<T>; 2]; 2],
}

/// Alias used where an operator is expected to be unitary.
pub type UnitaryOp<T> = Operator<T>;

impl<T: Real> Operator<T> {
    pub fn new(m: [[Complex<T>; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        let o = Complex::new(T::one(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self { m: [[o, z], [z, o]] }
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self { m: [[z, z], [z, z]] }
    }

    pub fn sigma_x() -> Self {
        let o = Complex::new(T::one(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self { m: [[z, o], [o, z]] }
    }

    pub fn sigma_y() -> Self {
        let i = Complex::new(T::zero(), T::one());
        let z = Complex::new(T::zero(), T::zero());
        Self { m: [[z, -i], [i, z]] }
    }

    pub fn sigma_z() -> Self {
        let o = Complex::new(T::one(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        Self { m: [[o, z], [z, -o]] }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let m = self.m;
        Self { m: [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]] }
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Self { m: [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]] }
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn determinant(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn apply(&self, s: &QubitState<T>) -> QubitState<T> {
        let [a, b] = s.amps;
        QubitState::from_amps_unchecked(self.m[0][0] * a + self.m[0][1] * b, self.m[1][0] * a + self.m[1][1] * b)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut d = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        d
    }

    /// Entrywise deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> T {
        (self.adjoint() * *self).max_abs_diff(&Self::identity())
    }

    /// `|tr(A†B)|/2`, equal to one iff the two unitaries agree up to a global phase.
    pub fn phase_insensitive_overlap(&self, other: &Self) -> T {
        (self.adjoint() * *other).trace().norm() / T::lit(2.0)
    }

    /// True when `self = e^{iγ}·other` entrywise within `tol`, for some γ.
    pub fn equals_up_to_phase(&self, other: &Self, tol: T) -> bool {
        // pick the largest entry of `other` to fix the phase
        let mut best = (0, 0);
        let mut best_abs = T::zero();
        for r in 0..2 {
            for c in 0..2 {
                let a = other.m[r][c].norm();
                if a > best_abs {
                    best_abs = a;
                    best = (r, c);
                }
            }
        }
        if best_abs == T::zero() {
            return self.max_abs_diff(other) <= tol;
        }
        let (r, c) = best;
        let ratio = self.m[r][c] / other.m[r][c];
        let n = ratio.norm();
        if n == T::zero() {
            return false;
        }
        let phase = ratio / n;
        self.max_abs_diff(&other.scale(phase)) <= tol
    }

    /// Hermitian part as a traceless Pauli vector plus identity coefficient,
    /// `(h₀, h)` with `self ≈ h₀ I + h·σ`. Only meaningful for Hermitian input.
    pub fn pauli_decomposition(&self) -> (T, Hamiltonian<T>) {
        let two = T::lit(2.0);
        let m = self.m;
        let h0 = (m[0][0].re + m[1][1].re) / two;
        let z = (m[0][0].re - m[1][1].re) / two;
        let x = (m[0][1].re + m[1][0].re) / two;
        let y = (m[1][0].im - m[0][1].im) / two;
        (h0, Hamiltonian::new(x, y, z))
    }
}

impl<T: Real> Mul for Operator<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = self.m;
        let b = rhs.m;
        Self {
            m: [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ],
        }
    }
}

impl<T: Real> Add for Operator<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut m = self.m;
        for (row, other) in m.iter_mut().zip(rhs.m) {
            for (a, b) in row.iter_mut().zip(other) {
                *a = *a + b;
            }
        }
        Self { m }
    }
}

impl<T: Real> Sub for Operator<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale(Complex::new(-T::one(), T::zero()))
    }
}

/// Traceless Hermitian operator `x σ_x + y σ_y + z σ_z` (ħ = 1, units rad/s).
///
/// Every Hamiltonian in this crate is traceless, so the Pauli vector is a
/// complete representation and makes the exponential closed form.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Hamiltonian<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Hamiltonian<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    /// `coef · σ_φ`, with `σ_φ = cos φ σ_x + sin φ σ_y`.
    #[inline]
    pub fn axis(phi: T, coef: T) -> Self {
        Self::new(coef * phi.cos(), coef * phi.sin(), T::zero())
    }

    #[inline]
    pub fn sigma_z(coef: T) -> Self {
        Self::new(T::zero(), T::zero(), coef)
    }

    #[inline]
    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    #[inline]
    pub fn scaled(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    /// Cross product of Pauli vectors: `[a·σ, b·σ] = 2i (a×b)·σ`.
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn matrix(&self) -> Operator<T> {
        let z0 = T::zero();
        Operator::new([
            [Complex::new(self.z, z0), Complex::new(self.x, -self.y)],
            [Complex::new(self.x, self.y), Complex::new(-self.z, z0)],
        ])
    }

    /// `exp(−i·dt·H)` via the axis-angle formula
    /// `cos(|h|dt) I − i sin(|h|dt) ĥ·σ`.
    #[inline]
    pub fn exp_step(&self, dt: T) -> Operator<T> {
        let n = self.norm();
        let angle = n * dt;
        let c = angle.cos();
        // sin(|h|dt)/|h|, finite as |h| → 0
        let s_over_n = if n > T::epsilon() { angle.sin() / n } else { dt };
        let (x, y, z) = (self.x * s_over_n, self.y * s_over_n, self.z * s_over_n);
        Operator::new([[Complex::new(c, -z), Complex::new(-y, -x)], [Complex::new(y, -x), Complex::new(c, z)]])
    }
}

impl<T: Real> Add for Hamiltonian<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for Hamiltonian<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for Hamiltonian<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Expectation values `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)` of a state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BlochVector<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> BlochVector<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn length(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, o: &Self) -> T {
        let (dx, dy, dz) = (self.x - o.x, self.y - o.y, self.z - o.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Bloch vector of a normalized state.
pub fn bloch_vector<T: Real>(state: &QubitState<T>) -> Result<BlochVector<T>> {
    state.check_normalized()?;
    let [a, b] = state.amplitudes();
    let ab = a.conj() * b;
    let two = T::lit(2.0);
    Ok(BlochVector::new(two * ab.re, two * ab.im, a.norm_sqr() - b.norm_sqr()))
}

/// `σ_φ = cos φ σ_x + sin φ σ_y` as a matrix.
pub fn pauli_axis<T: Real>(phi: T) -> Operator<T> {
    Hamiltonian::axis(phi, T::one()).matrix()
}

/// `|⟨b|a⟩|²`, clamped to `[0, 1]`.
pub fn state_fidelity<T: Real>(a: &QubitState<T>, b: &QubitState<T>) -> T {
    a.overlap(b).norm_sqr().min(T::one()).max(T::zero())
}
