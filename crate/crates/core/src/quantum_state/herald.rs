use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{JointSpectralAmplitude, QuantumError};

/// Temporal intensity of the photon heralded by a detection in a band.
#[derive(Debug, Clone, PartialEq)]
pub struct HeraldedPulse {
    /// Times (a.u.), centred on zero.
    pub times: Vec<f64>,
    /// Normalized to unit time integral.
    pub intensity: Vec<f64>,
    /// Sum-frequency orders carrying at least 1% of the heralded weight.
    pub orders: Vec<i64>,
}

/// Condition on the signal photon lying within `bandwidth / 2` of
/// `herald_omega`. Each herald bin contributes an incoherent term
/// `|FT_w'[J(w_h, w')](t)|^2`. `pad` sets the zero padding of the
/// transform and hence the time sampling.
pub fn heralded_pulse(
    jsa: &JointSpectralAmplitude,
    herald_omega: f64,
    bandwidth: f64,
    pad: usize,
) -> Result<HeraldedPulse, QuantumError> {
    let n = jsa.len();
    let rows: Vec<usize> = (0..n)
        .filter(|&i| (jsa.omegas[i] - herald_omega).abs() <= 0.5 * bandwidth)
        .collect();
    let weight: f64 = rows
        .iter()
        .flat_map(|&i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| jsa.get(i, j).norm_sqr())
        .sum();
    if rows.is_empty() || weight <= 0.0 {
        return Err(QuantumError::EmptyHerald);
    }
    let mut per_order: std::collections::BTreeMap<i64, f64> = Default::default();
    for &i in &rows {
        for j in 0..n {
            *per_order.entry(jsa.order_of(i, j)).or_default() += jsa.get(i, j).norm_sqr();
        }
    }
    let orders = per_order
        .into_iter()
        .filter(|(_, w)| *w >= 0.01 * weight)
        .map(|(q, _)| q)
        .collect();

    let n_fft = n.next_power_of_two() * pad.max(1);
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n_fft);
    let mut intensity = vec![0.0; n_fft];
    let mut buf = vec![Complex64::default(); n_fft];
    for &i in &rows {
        buf.iter_mut().for_each(|z| *z = Complex64::default());
        for (j, z) in buf.iter_mut().take(n).enumerate() {
            *z = jsa.get(i, j);
        }
        fft.process(&mut buf);
        for (acc, z) in intensity.iter_mut().zip(&buf) {
            *acc += z.norm_sqr();
        }
    }
    let dw = jsa.bin_width();
    let dt = 2.0 * PI / (n_fft as f64 * dw);
    let half = n_fft / 2;
    let times: Vec<f64> = (0..n_fft).map(|k| (k as f64 - half as f64) * dt).collect();
    let mut shifted: Vec<f64> = (0..n_fft).map(|k| intensity[(k + half) % n_fft]).collect();
    let total: f64 = shifted.iter().sum::<f64>() * dt;
    shifted.iter_mut().for_each(|v| *v /= total);
    Ok(HeraldedPulse {
        times,
        intensity: shifted,
        orders,
    })
}

impl HeraldedPulse {
    /// Local maxima above `rel` times the global maximum, as indices.
    pub fn peaks(&self, rel: f64) -> Vec<usize> {
        let p = &self.intensity;
        let top = p.iter().cloned().fold(0.0, f64::max);
        let n = p.len();
        (0..n)
            .filter(|&i| {
                let (a, b) = (p[(i + n - 1) % n], p[(i + 1) % n]);
                p[i] >= rel * top && p[i] > a && p[i] >= b
            })
            .collect()
    }

    /// Lag (a.u.) of the strongest non-central maximum of the intensity
    /// autocorrelation, or `None` when no lag reaches half the zero-lag
    /// value. Sub-peak structure inside each pulse of the train does not
    /// repeat coherently and so stays below the train maximum.
    pub fn train_period(&self) -> Option<f64> {
        let n = self.intensity.len();
        let mut buf: Vec<Complex64> = self.intensity.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut planner = FftPlanner::<f64>::new();
        planner.plan_fft_forward(n).process(&mut buf);
        buf.iter_mut().for_each(|z| *z = Complex64::new(z.norm_sqr(), 0.0));
        planner.plan_fft_inverse(n).process(&mut buf);
        let ac: Vec<f64> = buf.iter().map(|z| z.re / buf[0].re).collect();
        let best = (1..n / 2)
            .filter(|&k| ac[k] > ac[k - 1] && ac[k] >= ac[k + 1])
            .max_by(|&a, &b| ac[a].total_cmp(&ac[b]))?;
        if ac[best] < 0.5 {
            return None;
        }
        let (a, b, c) = (ac[best - 1], ac[best], ac[best + 1]);
        let shift = 0.5 * (a - c) / (a - 2.0 * b + c);
        Some((best as f64 + shift) * (self.times[1] - self.times[0]))
    }

    /// FWHM of the strongest peak (a.u.), linearly interpolated.
    pub fn main_peak_fwhm(&self) -> f64 {
        let p = &self.intensity;
        let n = p.len();
        let top = (0..n).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap_or(0);
        let half = 0.5 * p[top];
        let dt = self.times[1] - self.times[0];
        let mut width = 0.0;
        for dir in [1isize, -1] {
            let mut k = 0usize;
            loop {
                let i = (top as isize + dir * (k as isize + 1)).rem_euclid(n as isize) as usize;
                let prev = (top as isize + dir * k as isize).rem_euclid(n as isize) as usize;
                if p[i] <= half {
                    width += (k as f64 + (p[prev] - half) / (p[prev] - p[i])) * dt;
                    break;
                }
                k += 1;
                if k >= n / 2 {
                    width += k as f64 * dt;
                    break;
                }
            }
        }
        width
    }
}
