use num_complex::Complex64;
use rayon::prelude::*;

use crate::units;

use super::JointSpectralAmplitude;

/// Coincidence probability against arm delay.
#[derive(Debug, Clone, PartialEq)]
pub struct HomCurve {
    /// Delays (a.u.), ascending.
    pub delays: Vec<f64>,
    pub probability: Vec<f64>,
}

/// Symmetric delay grid `-max..=max` in steps of `step` (attoseconds).
pub fn default_delays(max_as: f64, step_as: f64) -> Vec<f64> {
    let m = (max_as / step_as).round() as i64;
    (-m..=m).map(|k| units::as_to_au_time(k as f64 * step_as)).collect()
}

/// `P(dt) = (1 - Re sum J(w, w') J*(w', w) e^{i (w - w') dt} dw dw') / 2`.
///
/// The double sum is first projected onto the difference index, leaving a
/// single sum per delay.
pub fn hom_curve(jsa: &JointSpectralAmplitude, delays: &[f64]) -> HomCurve {
    let n = jsa.len();
    let dw = jsa.bin_width();
    let mut g = vec![Complex64::default(); 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            g[i + n - 1 - j] += jsa.get(i, j) * jsa.get(j, i).conj();
        }
    }
    let dw2 = dw * dw;
    let probability = delays
        .par_iter()
        .map(|&t| {
            let step = Complex64::from_polar(1.0, dw * t);
            let mut phase = Complex64::from_polar(1.0, -((n - 1) as f64) * dw * t);
            let mut acc = 0.0;
            for gd in &g {
                acc += (gd * phase).re;
                phase *= step;
            }
            (0.5 * (1.0 - acc * dw2)).clamp(0.0, 1.0)
        })
        .collect();
    HomCurve {
        delays: delays.to_vec(),
        probability,
    }
}

impl HomCurve {
    /// Index of the delay closest to zero.
    pub fn zero_index(&self) -> usize {
        (0..self.delays.len())
            .min_by(|&a, &b| self.delays[a].abs().total_cmp(&self.delays[b].abs()))
            .unwrap_or(0)
    }

    /// Full width at half maximum of `1/2 - P` around zero delay (a.u.),
    /// linearly interpolated on each side. `None` if a side never drops
    /// below half depth.
    pub fn dip_fwhm(&self) -> Option<f64> {
        let z = self.zero_index();
        let depth: Vec<f64> = self.probability.iter().map(|p| 0.5 - p).collect();
        let half = 0.5 * depth[z];
        if half <= 0.0 {
            return None;
        }
        let cross = |range: &mut dyn Iterator<Item = usize>, dir: isize| -> Option<f64> {
            for i in range {
                let prev = (i as isize - dir) as usize;
                if depth[i] <= half {
                    let f = (depth[prev] - half) / (depth[prev] - depth[i]);
                    return Some(self.delays[prev] + f * (self.delays[i] - self.delays[prev]));
                }
            }
            None
        };
        let right = cross(&mut (z + 1..self.delays.len()), 1)?;
        let left = cross(&mut (0..z).rev(), -1)?;
        Some(right - left)
    }

    /// Strict local extrema of `P` at positive delays, as `(delay, P)`.
    pub fn extrema(&self) -> Vec<(f64, f64)> {
        let p = &self.probability;
        (1..p.len().saturating_sub(1))
            .filter(|&i| self.delays[i] > 0.0)
            .filter(|&i| (p[i] - p[i - 1]) * (p[i + 1] - p[i]) < 0.0)
            .map(|i| (self.delays[i], p[i]))
            .collect()
    }

    /// First extremum with delay in `[lo, hi]`.
    pub fn extremum_in(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.extrema().into_iter().find(|(t, _)| *t >= lo && *t <= hi)
    }
}
