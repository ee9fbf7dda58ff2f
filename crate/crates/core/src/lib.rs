//! Strong-field pair generation simulator.
//!
//! A driven 1D model atom is propagated with a split-operator scheme; its
//! one- and two-time dipole records feed harmonic and photon-pair spectra,
//! a gas-filled waveguide phase-matching model, and biphoton state analysis
//! (Hong-Ou-Mandel interference, Schmidt decomposition, heralding).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod io;
pub mod macroscopic;
pub mod quantum_state;
pub mod spectra;
pub mod tdse;
pub mod units;

pub use num_complex::Complex64;
pub use tdse::{
    find_ground_state, propagate, two_time_correlation, AtomModel, CorrelationMatrix, DipoleRecord, EnvelopeKind,
    LaserPulse, PropagationSettings, SpatialGrid, TdseError,
};
