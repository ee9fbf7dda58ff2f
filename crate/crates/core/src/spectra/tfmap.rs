use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::tdse::CorrelationMatrix;

use super::fourier::{fft_frequencies, transform_2d_weighted};
use super::SpectraError;

/// Gaussian windows are truncated at this many FWHM on either side.
const SUPPORT_FWHM: f64 = 2.0;

/// Localized two-time spectral content. For every unordered pair of window
/// centres `(tau_a, tau_b)` the map holds the `(omega omega')^3 |C|^2`
/// weighted intensity of the windowed correlator, projected onto the sum
/// frequency `omega + omega'`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrequencyMap {
    pub window_centers: Vec<f64>,
    /// Sum-frequency axis (a.u.).
    pub sum_omegas: Vec<f64>,
    /// `content[(a * n_c + b) * n_s + s]`, symmetric in `(a, b)`.
    pub content: Vec<f64>,
    /// Full width at half maximum of the Gaussian windows.
    pub window_width: f64,
}

impl TimeFrequencyMap {
    pub fn n_centers(&self) -> usize {
        self.window_centers.len()
    }

    pub fn slice(&self, a: usize, b: usize) -> &[f64] {
        let n_s = self.sum_omegas.len();
        let k = (a * self.n_centers() + b) * n_s;
        &self.content[k..k + n_s]
    }

    /// Content of the window pair in the sum-frequency band `[lo, hi)`.
    pub fn band(&self, a: usize, b: usize, lo: f64, hi: f64) -> f64 {
        self.slice(a, b)
            .iter()
            .zip(&self.sum_omegas)
            .filter(|(_, w)| **w >= lo && **w < hi)
            .map(|(v, _)| *v)
            .sum()
    }

    /// Mean band content as a function of centre separation (in multiples of
    /// the centre spacing), over all pairs with that separation.
    pub fn separation_profile(&self, lo: f64, hi: f64) -> Vec<(f64, f64)> {
        let n = self.n_centers();
        let spacing = if n > 1 {
            self.window_centers[1] - self.window_centers[0]
        } else {
            0.0
        };
        (0..n)
            .map(|d| {
                let sum: f64 = (0..n - d).map(|a| self.band(a, a + d, lo, hi)).sum();
                (d as f64 * spacing, sum / (n - d) as f64)
            })
            .collect()
    }
}

/// Gabor-type analysis of `C(t, t')` with Gaussian windows of FWHM
/// `window_width`, centres every `center_stride` samples.
pub fn time_frequency_map(
    corr: &CorrelationMatrix,
    window_width: f64,
    center_stride: usize,
) -> Result<TimeFrequencyMap, SpectraError> {
    let dt = corr.spacing();
    if !(window_width >= 4.0 * dt) {
        return Err(SpectraError::WindowTooNarrow {
            width: window_width,
            min: 4.0 * dt,
        });
    }
    let n = corr.len();
    let half = (SUPPORT_FWHM * window_width / dt).ceil() as usize;
    let len = 2 * half + 1;
    if len > n || center_stride == 0 {
        return Err(SpectraError::WindowTooNarrow {
            width: window_width,
            min: 4.0 * dt,
        });
    }
    let sigma = window_width / (2.0 * (2.0 * 2f64.ln()).sqrt());
    let gauss: Vec<f64> = (0..len)
        .map(|k| {
            let t = (k as f64 - half as f64) * dt;
            (-0.5 * (t / sigma).powi(2)).exp() * dt
        })
        .collect();
    let centers: Vec<usize> = (half..n - half).step_by(center_stride).collect();
    let n_c = centers.len();
    let n_fft = len.next_power_of_two();
    let freqs = fft_frequencies(n_fft, dt);
    let keep = n_fft / 2 + 1;
    let n_s = 2 * keep - 1;
    let weight: Vec<f64> = freqs[..keep].iter().map(|w| w.powi(3)).collect();

    let pairs: Vec<(usize, usize)> = (0..n_c).flat_map(|a| (a..n_c).map(move |b| (a, b))).collect();
    let slices: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (ra, rb) = (centers[a] - half, centers[b] - half);
            let mut block = vec![Complex64::default(); len * len];
            for i in 0..len {
                for j in 0..len {
                    block[i * len + j] = corr.get(ra + i, rb + j);
                }
            }
            let full = transform_2d_weighted(&block, len, &gauss, &gauss, n_fft);
            let mut out = vec![0.0; n_s];
            for k in 0..keep {
                for l in 0..keep {
                    out[k + l] += weight[k] * weight[l] * full[k * n_fft + l].norm_sqr();
                }
            }
            out
        })
        .collect();

    let mut content = vec![0.0; n_c * n_c * n_s];
    for (&(a, b), s) in pairs.iter().zip(&slices) {
        content[(a * n_c + b) * n_s..(a * n_c + b + 1) * n_s].copy_from_slice(s);
        content[(b * n_c + a) * n_s..(b * n_c + a + 1) * n_s].copy_from_slice(s);
    }
    let dw = 2.0 * PI / (n_fft as f64 * dt);
    Ok(TimeFrequencyMap {
        window_centers: centers.iter().map(|&c| corr.times()[c]).collect(),
        sum_omegas: (0..n_s).map(|k| k as f64 * dw).collect(),
        content,
        window_width,
    })
}
