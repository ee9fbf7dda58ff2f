use std::f64::consts::PI;

use num_complex::Complex64;

use crate::tdse::CorrelationMatrix;
use crate::units::{ALPHA, C_AU};

use super::fourier::{fft_frequencies, padded_len, windowed_transform_2d, WindowKind};
use super::SpectraError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOptions {
    pub window: WindowKind,
    pub pad_factor: usize,
    /// Drop bins above this angular frequency (a.u.) to bound memory.
    pub max_omega: Option<f64>,
}

impl Default for PairOptions {
    fn default() -> Self {
        Self {
            window: WindowKind::Hann,
            pad_factor: 1,
            max_omega: None,
        }
    }
}

/// Complex two-frequency correlator `C(omega, omega')` on the
/// positive-frequency quadrant, symmetrized under exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAmplitude {
    pub omegas: Vec<f64>,
    /// Row-major, `omegas.len()` squared.
    pub values: Vec<Complex64>,
    pub window: WindowKind,
}

impl PairAmplitude {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.omegas.len() + j]
    }

    pub fn bin_width(&self) -> f64 {
        self.omegas.get(1).copied().unwrap_or(0.0) - self.omegas[0]
    }
}

/// `dP/(domega domega')` on the positive quadrant; `omegas` serves both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSpectrum {
    pub omegas: Vec<f64>,
    pub dp: Vec<f64>,
    pub window: WindowKind,
}

impl PairSpectrum {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dp[i * self.omegas.len() + j]
    }

    pub fn bin_width(&self) -> f64 {
        self.omegas.get(1).copied().unwrap_or(0.0) - self.omegas[0]
    }

    pub fn total(&self) -> f64 {
        self.dp.iter().sum()
    }

    /// Fraction of the summed intensity lying within `half_width` of a line
    /// `omega + omega' = q omega0` with `q` accepted by `keep`.
    pub fn stripe_fraction(&self, omega0: f64, half_width: f64, keep: impl Fn(i64) -> bool) -> f64 {
        let n = self.len();
        let mut inside = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = self.dp[i * n + j];
                total += v;
                let s = (self.omegas[i] + self.omegas[j]) / omega0;
                let q = s.round();
                if keep(q as i64) && (s - q).abs() * omega0 <= half_width {
                    inside += v;
                }
            }
        }
        if total > 0.0 {
            inside / total
        } else {
            0.0
        }
    }

    /// Intensity summed along anti-diagonals, indexed by `k + l` bins
    /// (sum frequency `(k + l) * bin_width`).
    pub fn sum_frequency_profile(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; 2 * n - 1];
        for i in 0..n {
            for j in 0..n {
                out[i + j] += self.dp[i * n + j];
            }
        }
        out
    }
}

/// Full-plane windowed 2D transform of `C(t, t')` in FFT order together with
/// its frequency axis.
pub fn correlation_transform(
    corr: &CorrelationMatrix,
    window: WindowKind,
    pad_factor: usize,
) -> (Vec<f64>, Vec<Complex64>) {
    let n = corr.len();
    let n_fft = padded_len(n, pad_factor);
    let full = windowed_transform_2d(corr.values(), n, corr.spacing(), window, n_fft);
    (fft_frequencies(n_fft, corr.spacing()), full)
}

pub fn pair_amplitude(corr: &CorrelationMatrix, opts: &PairOptions) -> Result<PairAmplitude, SpectraError> {
    if !corr.is_connected() {
        return Err(SpectraError::NotConnected);
    }
    if corr.len() < 4 {
        return Err(SpectraError::TooShortRecord {
            span: corr.spacing() * corr.len() as f64,
            needed: 4.0 * corr.spacing(),
        });
    }
    let (freqs, full) = correlation_transform(corr, opts.window, opts.pad_factor);
    let n_fft = freqs.len();
    let mut keep = n_fft / 2 + 1;
    if let Some(wmax) = opts.max_omega {
        keep = keep.min(freqs.iter().take_while(|w| **w <= wmax).count().max(2));
    }
    let mut values = vec![Complex64::default(); keep * keep];
    for k in 0..keep {
        for l in 0..keep {
            values[k * keep + l] = 0.5 * (full[k * n_fft + l] + full[l * n_fft + k]);
        }
    }
    Ok(PairAmplitude {
        omegas: freqs[..keep].to_vec(),
        values,
        window: opts.window,
    })
}

/// `(2 alpha^2 / 9 pi^2) (omega omega')^3 |C(omega, omega')|^2 / c^4`.
pub fn pair_spectrum_from_amplitude(amp: &PairAmplitude) -> PairSpectrum {
    let n = amp.len();
    let pref = 2.0 * ALPHA * ALPHA / (9.0 * PI * PI * C_AU.powi(4));
    let mut dp = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let ww = amp.omegas[i] * amp.omegas[j];
            dp[i * n + j] = pref * ww.powi(3) * amp.values[i * n + j].norm_sqr();
        }
    }
    PairSpectrum {
        omegas: amp.omegas.clone(),
        dp,
        window: amp.window,
    }
}

pub fn pair_spectrum(corr: &CorrelationMatrix, opts: &PairOptions) -> Result<PairSpectrum, SpectraError> {
    pair_amplitude(corr, opts).map(|a| pair_spectrum_from_amplitude(&a))
}
