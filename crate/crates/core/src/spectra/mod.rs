//! Emission observables from dipole records and correlation matrices.
//!
//! Transforms use `f(omega) = sum_j dt e^{+i omega t_j} w_j f_j`; the same
//! convention carries into the biphoton amplitude.

mod cutoff;
mod fourier;
mod hhg;
mod pair;
mod tfmap;

use thiserror::Error;

pub use cutoff::{
    cutoff_report, estimate_cutoff, predicted_cutoff, CutoffEstimate, CutoffInput, CutoffReport, PairCutoffStats,
    CUTOFF_DROP, CUTOFF_UP_COEFF, MEDIAN_WIDTH,
};
pub use fourier::{fft_frequencies, windowed_transform, windowed_transform_2d, WindowKind};
pub use hhg::{hhg_spectrum, HhgSpectrum, SpectrumOptions};
pub use pair::{
    correlation_transform, pair_amplitude, pair_spectrum, pair_spectrum_from_amplitude, PairAmplitude, PairOptions,
    PairSpectrum,
};
pub use tfmap::{time_frequency_map, TimeFrequencyMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("record spans {span:.2} a.u., need at least {needed:.2} a.u.")]
    TooShortRecord { span: f64, needed: f64 },
    #[error("pair spectrum requires a connected correlator")]
    NotConnected,
    #[error("no plateau found in the harmonic envelope")]
    NoPlateauDetected,
    #[error("spectrum reaches harmonic {top:.1}, need {needed:.1}")]
    InsufficientCoverage { top: f64, needed: f64 },
    #[error("window width {width:.3} a.u. below the minimum {min:.3} a.u.")]
    WindowTooNarrow { width: f64, min: f64 },
}
