//! Biphoton state built from pair amplitudes: joint spectral amplitude,
//! Hong-Ou-Mandel interference, Schmidt decomposition and heralding.

mod herald;
mod hom;
mod jsa;
mod schmidt;

use thiserror::Error;

pub use herald::{heralded_pulse, HeraldedPulse};
pub use hom::{default_delays, hom_curve, HomCurve};
pub use jsa::{build_jsa, Collection, JointSpectralAmplitude, PhaseMatchingMask};
pub use schmidt::{schmidt_decompose, SchmidtOptions, SchmidtReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("collection mask removes all amplitude")]
    EmptyAcceptance,
    #[error("no amplitude inside the herald band")]
    EmptyHerald,
    #[error("singular value decomposition failed: {0}")]
    SvdFailure(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
