//! Simulated state-independent contextuality test on a single qutrit.
//!
//! The crate covers the 13 Yu-Oh rays and their compatibility graph
//! ([`rays`]), exhaustive noncontextual bounds ([`nchv`]), exact qutrit
//! algebra ([`qutrit`]), two-channel microwave pulse compilation ([`pulse`]),
//! and a photon-counting readout simulation of an NV-center spin
//! ([`readout`], [`experiment`]).

// Negated comparisons also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod config;
pub mod experiment;
pub mod nchv;
pub mod pulse;
pub mod qutrit;
pub mod rays;
pub mod readout;
pub mod verify;

pub use experiment::{CorrelationMethod, Experiment, ExperimentReport, SimError};
pub use qutrit::{Channel, DensityOperator, StateVector, UnitaryOperator};
pub use rays::{Ray, YuOhSet};
pub use readout::{FluorescenceModel, NoiseConfig};

/// Quantum value of the inequality for every state.
pub const QUANTUM_VALUE: f64 = 25.0 / 3.0;
/// Noncontextual bound of the inequality.
pub const CLASSICAL_BOUND: f64 = 8.0;
/// Quantum value of `Σ⟨ĥ_k⟩`.
pub const H_QUANTUM_VALUE: f64 = 4.0 / 3.0;
/// Noncontextual bound of `Σ⟨ĥ_k⟩`.
pub const H_CLASSICAL_BOUND: f64 = 1.0;
