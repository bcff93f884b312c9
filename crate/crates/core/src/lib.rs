//! Single-qubit simulator for continuously driven dressed qubits with
//! amplitude, phase or combined modulation of the dressing field.

// `!(x > 0)` is the NaN-rejecting form used by every validator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clifford;
pub mod drive;
pub mod error;
pub mod experiments;
pub mod propagator;
pub mod pulse;
pub mod qubit;
pub mod scalar;

pub use clifford::{CliffordGate, CliffordTable, Primitive, RecoveryTarget};
pub use drive::{DriveConfig, Frame, IqSample, Scheme};
pub use error::{CcdError, Result};
pub use propagator::{IntegratorSpec, Method, TimeDependent};
pub use pulse::{CompiledProgram, PulseProgram, PulseSegment, SegmentKind};
pub use qubit::{BlochVector, Hamiltonian, Operator, QubitState, UnitaryOp};
pub use scalar::Real;

pub type State = QubitState<f64>;
pub type Unitary = Operator<f64>;
pub type Drive = DriveConfig<f64>;
pub type Integrator = IntegratorSpec<f64>;
pub type Program = PulseProgram<f64>;
pub type Compiled = CompiledProgram<f64>;
