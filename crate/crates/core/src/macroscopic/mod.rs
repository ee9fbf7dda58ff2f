//! Phase matching of pair emission in a gas-filled capillary and the
//! resulting angle- and frequency-resolved yield.

mod dispersion;
mod phase;
mod yield_map;

use thiserror::Error;

pub use dispersion::{DispersionModel, GasSpecies, EH11_ROOT};
pub use phase::{
    emission_angle, emission_angle_with, emission_cosine, hhg_mismatch, hhg_suppression_ratio,
    ionization_for_degenerate_angle, phase_mismatch, sinc_sq, IndexConvention, PhaseMismatch,
};
pub use yield_map::{angular_yield, comb_edge, AngularYieldMap, InteractionGeometry, StripeYield, YieldOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MacroError {
    #[error("invalid dispersion model or geometry: {0}")]
    InvalidModel(String),
    #[error("outside the domain: {0}")]
    DomainError(String),
    #[error("no phase-matched angle for q = {q}, omega = {omega:.5} (cos = {cosine:.8})")]
    NoSolution { q: f64, omega: f64, cosine: f64 },
    #[error("requested band [{lo:.4}, {hi:.4}] a.u. not covered by the spectrum (max {available:.4})")]
    BandMismatch { lo: f64, hi: f64, available: f64 },
    #[error("geometry density or radius disagrees with the dispersion model")]
    GeometryMismatch,
}
