//! Driven 1D model atom: soft-core ground state, split-operator propagation
//! in the length gauge, and one- and two-time dipole records.

mod atom;
mod correlation;
mod grid;
mod propagate;
mod pulse;

use thiserror::Error;

pub use atom::{find_ground_state, find_ground_state_with, AtomModel, GroundStateOptions};
pub use correlation::{two_time_correlation, two_time_correlation_raw, CorrelationMatrix};
pub use grid::SpatialGrid;
pub use propagate::{propagate, Absorber, DipoleRecord, PropagationSettings, Propagator, TimeGrid};
pub use pulse::{EnvelopeKind, LaserPulse};

pub(crate) use grid::FftPair;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TdseError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),
    #[error("invalid propagation settings: {0}")]
    InvalidSettings(String),
    #[error("imaginary-time relaxation did not converge (residual {residual:.3e})")]
    NonConvergence { residual: f64 },
    #[error("no softening in [{lo}, {hi}] a.u. brackets the target energy {target:.6} a.u.")]
    RootBracketFailure { lo: f64, hi: f64, target: f64 },
    #[error("bound state reaches the grid edge (amplitude {amplitude:.3e}); enlarge the grid")]
    BoundaryLeak { amplitude: f64 },
    #[error("non-finite amplitude at t = {time:.3} a.u.")]
    NumericalBlowup { time: f64 },
    #[error("absorbed probability {loss:.3} exceeds 0.5; results unreliable")]
    ExcessiveAbsorption { loss: f64 },
    #[error("cached correlation matrix does not match the request: {0}")]
    CacheMismatch(String),
}
