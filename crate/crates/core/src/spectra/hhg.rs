use std::f64::consts::PI;

use crate::tdse::DipoleRecord;
use crate::units::{ALPHA, C_AU, HARTREE_EV};

use super::fourier::{fft_frequencies, padded_len, windowed_transform, WindowKind};
use super::SpectraError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub window: WindowKind,
    /// Zero padding: the FFT length is the next power of two above the record
    /// length times this factor.
    pub pad_factor: usize,
    /// Restrict the analysis to samples with `lo <= t <= hi` (a.u.); the
    /// window then spans the gate rather than the whole record.
    pub gate: Option<(f64, f64)>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            window: WindowKind::Hann,
            pad_factor: 2,
            gate: None,
        }
    }
}

/// Single-atom emission probability per unit frequency on the non-negative
/// FFT bins.
#[derive(Debug, Clone, PartialEq)]
pub struct HhgSpectrum {
    pub omegas: Vec<f64>,
    pub dp_domega: Vec<f64>,
    pub omega0: f64,
    pub window: WindowKind,
}

impl HhgSpectrum {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn harmonic(&self, i: usize) -> f64 {
        self.omegas[i] / self.omega0
    }

    pub fn ev(&self, i: usize) -> f64 {
        self.omegas[i] * HARTREE_EV
    }

    pub fn bin_width(&self) -> f64 {
        if self.omegas.len() < 2 {
            0.0
        } else {
            self.omegas[1] - self.omegas[0]
        }
    }

    /// Largest value within `[h - half, h + half]` harmonic orders.
    pub fn peak_near(&self, h: f64, half: f64) -> f64 {
        self.omegas
            .iter()
            .zip(&self.dp_domega)
            .filter(|(w, _)| (*w / self.omega0 - h).abs() <= half)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    }
}

/// `dP/domega = (2 alpha / 3 pi) omega^3 |x(omega)|^2 / c^2`.
pub fn hhg_spectrum(record: &DipoleRecord, omega0: f64, opts: &SpectrumOptions) -> Result<HhgSpectrum, SpectraError> {
    let dt = record.spacing();
    let samples: Vec<f64> = match opts.gate {
        None => record.dipole.clone(),
        Some((lo, hi)) => record
            .times
            .iter()
            .zip(&record.dipole)
            .filter(|(t, _)| **t >= lo - 1e-9 * dt && **t <= hi + 1e-9 * dt)
            .map(|(_, d)| *d)
            .collect(),
    };
    let span = dt * (samples.len().saturating_sub(1)) as f64;
    if samples.len() < 4 || span < 2.0 * 2.0 * PI / omega0 {
        return Err(SpectraError::TooShortRecord {
            span,
            needed: 2.0 * 2.0 * PI / omega0,
        });
    }
    let n_fft = padded_len(samples.len(), opts.pad_factor);
    let spec = windowed_transform(&samples, dt, opts.window, n_fft);
    let freqs = fft_frequencies(n_fft, dt);
    let pref = 2.0 * ALPHA / (3.0 * PI * C_AU * C_AU);
    let keep = n_fft / 2 + 1;
    let dp_domega = spec[..keep]
        .iter()
        .zip(&freqs[..keep])
        .map(|(x, w)| pref * w.powi(3) * x.norm_sqr())
        .collect();
    Ok(HhgSpectrum {
        omegas: freqs[..keep].to_vec(),
        dp_domega,
        omega0,
        window: opts.window,
    })
}
