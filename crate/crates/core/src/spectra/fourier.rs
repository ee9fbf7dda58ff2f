//! Windowed transforms with the analysis convention
//! `f(omega) = sum_j dt e^{+i omega t_j} w_j f_j`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowKind {
    /// Symmetric Hann, zero at both ends of the record.
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn name(&self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        }
    }

    pub fn weights(&self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Hann => {
                if len < 2 {
                    return vec![1.0; len];
                }
                let span = (len - 1) as f64;
                (0..len).map(|j| (PI * j as f64 / span).sin().powi(2)).collect()
            }
        }
    }
}

/// Angular frequencies of the FFT bins in FFT order (negative half last).
pub fn fft_frequencies(n_fft: usize, dt: f64) -> Vec<f64> {
    let dw = 2.0 * PI / (n_fft as f64 * dt);
    (0..n_fft)
        .map(|k| {
            if k <= n_fft / 2 {
                k as f64 * dw
            } else {
                (k as f64 - n_fft as f64) * dw
            }
        })
        .collect()
}

/// Full-length windowed transform of a uniformly sampled real record
/// starting at `t = 0`, zero padded to `n_fft`.
pub fn windowed_transform(samples: &[f64], dt: f64, window: WindowKind, n_fft: usize) -> Vec<Complex64> {
    assert!(n_fft >= samples.len());
    let w = window.weights(samples.len());
    let mut buf: Vec<Complex64> = samples
        .iter()
        .zip(&w)
        .map(|(x, w)| Complex64::new(x * w * dt, 0.0))
        .collect();
    buf.resize(n_fft, Complex64::default());
    FftPlanner::new().plan_fft_inverse(n_fft).process(&mut buf);
    buf
}

/// Separable-window 2D transform of an `n x n` row-major matrix, zero padded
/// to `n_fft x n_fft`, full plane in FFT order.
pub fn windowed_transform_2d(
    values: &[Complex64],
    n: usize,
    dt: f64,
    window: WindowKind,
    n_fft: usize,
) -> Vec<Complex64> {
    let w = window.weights(n);
    let wt: Vec<f64> = w.iter().map(|x| x * dt).collect();
    transform_2d_weighted(values, n, &wt, &wt, n_fft)
}

/// `out[k][l] = sum_ij e^{i(omega_k t_i + omega_l t_j)} row_w_i col_w_j m_ij`
pub(crate) fn transform_2d_weighted(
    values: &[Complex64],
    n: usize,
    row_w: &[f64],
    col_w: &[f64],
    n_fft: usize,
) -> Vec<Complex64> {
    assert!(n_fft >= n && values.len() == n * n);
    let fft = FftPlanner::new().plan_fft_inverse(n_fft);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // Transform along j for every populated row i.
    let mut rows = vec![Complex64::default(); n * n_fft];
    for i in 0..n {
        let row = &mut rows[i * n_fft..(i + 1) * n_fft];
        for j in 0..n {
            row[j] = values[i * n + j] * (row_w[i] * col_w[j]);
        }
        fft.process_with_scratch(row, &mut scratch);
    }
    // Then along i, column by column.
    let mut out = vec![Complex64::default(); n_fft * n_fft];
    let mut col = vec![Complex64::default(); n_fft];
    for l in 0..n_fft {
        col.iter_mut().for_each(|z| *z = Complex64::default());
        for i in 0..n {
            col[i] = rows[i * n_fft + l];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for k in 0..n_fft {
            out[k * n_fft + l] = col[k];
        }
    }
    out
}

pub(crate) fn padded_len(n: usize, pad_factor: usize) -> usize {
    n.next_power_of_two() * pad_factor.max(1)
}
