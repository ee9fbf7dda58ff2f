use crate::tdse::{AtomModel, LaserPulse};

use super::{HhgSpectrum, PairSpectrum, SpectraError};

/// Cutoff-law coefficient multiplying the ponderomotive energy.
pub const CUTOFF_UP_COEFF: f64 = 3.17;
/// Envelope drop (relative to the plateau median) that marks the cutoff.
pub const CUTOFF_DROP: f64 = 1e-2;
/// Width (harmonic orders) of the rolling median applied to the per-harmonic
/// peak envelope.
pub const MEDIAN_WIDTH: usize = 5;
const MIN_PLATEAU_ORDERS: usize = 4;

/// Spectrum the cutoff estimator can read: harmonic order axis plus a
/// per-harmonic peak envelope.
pub enum CutoffInput<'a> {
    Hhg(&'a HhgSpectrum),
    Pair(&'a PairSpectrum),
}

impl<'a> From<&'a HhgSpectrum> for CutoffInput<'a> {
    fn from(s: &'a HhgSpectrum) -> Self {
        CutoffInput::Hhg(s)
    }
}

impl<'a> From<&'a PairSpectrum> for CutoffInput<'a> {
    fn from(s: &'a PairSpectrum) -> Self {
        CutoffInput::Pair(s)
    }
}

/// Pair-spectrum intensity split by the two cutoffs. Sums are over bins
/// (multiply by the bin area for integrals); `*_mean` are per-bin averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairCutoffStats {
    /// `omega + omega' <= q_c omega0`.
    pub primary: f64,
    /// Above the primary line but with both `omega, omega' <= q_c omega0`.
    pub between: f64,
    /// Either photon above `q_c omega0`.
    pub beyond_box: f64,
    pub between_mean: f64,
    pub beyond_box_mean: f64,
    /// Mean per-bin intensity on even-q stripes (within a quarter photon of
    /// the line) inside the plateau.
    pub plateau_stripe_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffReport {
    pub q_c: f64,
    pub predicted_q_c: f64,
    /// Where the envelope first falls `CUTOFF_DROP` below the plateau.
    pub q_drop: f64,
    pub omega0: f64,
    /// Harmonic interval used for the plateau level.
    pub plateau_range: (f64, f64),
    pub plateau_level: f64,
    /// Smoothed per-harmonic envelope, index = harmonic order.
    pub envelope: Vec<f64>,
    pub pair: Option<PairCutoffStats>,
}

impl CutoffReport {
    /// Frequency of the primary cutoff line `omega + omega' = q_c omega0`.
    pub fn primary_cutoff_line(&self) -> f64 {
        self.q_c * self.omega0
    }

    /// Edge of the secondary box `omega, omega' <= q_c omega0`.
    pub fn secondary_cutoff_box(&self) -> f64 {
        self.q_c * self.omega0
    }
}

/// `(I_p + 3.17 U_p) / omega0`.
pub fn predicted_cutoff(ip: f64, up: f64, omega0: f64) -> f64 {
    (ip + CUTOFF_UP_COEFF * up) / omega0
}

/// Largest value within one order of each harmonic `h = 0..=h_max`. The
/// two-order span makes the envelope insensitive to which parity carries the
/// lines.
fn harmonic_peaks(orders: impl Iterator<Item = (f64, f64)>, h_max: usize) -> Vec<f64> {
    let mut peaks = vec![0.0f64; h_max + 1];
    for (h, v) in orders {
        let lo = (h - 1.0).ceil().max(0.0) as usize;
        let hi = ((h + 1.0).floor().max(0.0) as usize).min(h_max);
        for p in peaks.iter_mut().take(hi + 1).skip(lo) {
            *p = p.max(v);
        }
    }
    peaks
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn rolling_median(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            median(&mut values[lo..hi].to_vec())
        })
        .collect()
}

/// Result of [`estimate_cutoff`] on a per-harmonic envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffEstimate {
    /// Plateau edge: where the plateau level meets the log-linear fall-off.
    pub q_c: f64,
    /// First crossing of `CUTOFF_DROP` times the plateau level.
    pub q_drop: f64,
    pub level: f64,
}

/// Plateau and cutoff from a smoothed per-harmonic envelope.
///
/// Scanning upward from `h_start`, the plateau ends at the first order whose
/// envelope falls below `CUTOFF_DROP` times the median of the orders before
/// it. The plateau level is the median over that range. The falling edge,
/// from half a decade below the level to the drop point, is fit by a line in
/// log space and `q_c` is where the line meets the plateau level.
pub fn estimate_cutoff(envelope: &[f64], h_start: usize) -> Result<CutoffEstimate, SpectraError> {
    let h_top = envelope.len().saturating_sub(1);
    if h_start + MIN_PLATEAU_ORDERS > h_top {
        return Err(SpectraError::NoPlateauDetected);
    }
    let h_drop = (h_start + MIN_PLATEAU_ORDERS..=h_top)
        .find(|&h| envelope[h] < CUTOFF_DROP * median(&mut envelope[h_start..h].to_vec()))
        .ok_or(SpectraError::NoPlateauDetected)?;
    let level = median(&mut envelope[h_start..h_drop].to_vec());
    if !(level > 0.0) {
        return Err(SpectraError::NoPlateauDetected);
    }
    let log_level = level.log10();
    let log_at = |h: usize| envelope[h].max(f64::MIN_POSITIVE).log10();

    let (a, b) = (log_at(h_drop - 1), log_at(h_drop));
    let q_drop = (h_drop - 1) as f64 + ((a - (log_level - 2.0)) / (a - b)).clamp(0.0, 1.0);

    // Falling edge: from the first order more than half a decade below the
    // plateau down to the drop point.
    let mut lo = h_drop;
    while lo > h_start && log_at(lo - 1) < log_level - 0.5 {
        lo -= 1;
    }
    // a one-order cliff still gets a two-point line through the last plateau order
    lo = lo.min(h_drop - 1);
    let pts: Vec<(f64, f64)> = (lo..=h_drop).map(|h| (h as f64, log_at(h))).collect();
    let q_c = match fit_line(&pts) {
        Some((slope, icpt)) if slope < 0.0 => ((log_level - icpt) / slope).clamp(h_start as f64, q_drop),
        _ => q_drop,
    };
    if q_c < (h_start + MIN_PLATEAU_ORDERS) as f64 {
        return Err(SpectraError::NoPlateauDetected);
    }
    Ok(CutoffEstimate { q_c, q_drop, level })
}

fn fit_line(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

pub fn cutoff_report<'a>(
    spec: impl Into<CutoffInput<'a>>,
    atom: &AtomModel,
    pulse: &LaserPulse,
) -> Result<CutoffReport, SpectraError> {
    let omega0 = pulse.omega0();
    let predicted = predicted_cutoff(atom.ionization_energy(), pulse.up(), omega0);
    let input = spec.into();
    let top = match &input {
        CutoffInput::Hhg(s) => s.omegas.last().copied().unwrap_or(0.0) / omega0,
        CutoffInput::Pair(s) => 2.0 * s.omegas.last().copied().unwrap_or(0.0) / omega0,
    };
    if top < 1.5 * predicted {
        return Err(SpectraError::InsufficientCoverage {
            top,
            needed: 1.5 * predicted,
        });
    }
    let h_max = top.floor() as usize;
    let peaks = match &input {
        CutoffInput::Hhg(s) => harmonic_peaks(s.omegas.iter().zip(&s.dp_domega).map(|(w, v)| (w / omega0, *v)), h_max),
        CutoffInput::Pair(s) => {
            let dw = s.bin_width();
            let profile = s.sum_frequency_profile();
            harmonic_peaks(
                profile.iter().enumerate().map(|(k, v)| (k as f64 * dw / omega0, *v)),
                h_max,
            )
        }
    };
    let envelope = rolling_median(&peaks, MEDIAN_WIDTH);
    let h_start = (atom.ionization_energy() / omega0).ceil() as usize;
    let est = estimate_cutoff(&envelope, h_start)?;
    let q_c = est.q_c;
    let pair = match &input {
        CutoffInput::Pair(s) => Some(pair_stats(s, omega0, q_c, h_start as f64)),
        CutoffInput::Hhg(_) => None,
    };
    Ok(CutoffReport {
        q_c,
        predicted_q_c: predicted,
        omega0,
        plateau_range: (h_start as f64, q_c),
        q_drop: est.q_drop,
        plateau_level: est.level,
        envelope,
        pair,
    })
}

fn pair_stats(s: &PairSpectrum, omega0: f64, q_c: f64, h_start: f64) -> PairCutoffStats {
    let n = s.len();
    let edge = q_c * omega0;
    let (mut primary, mut between, mut beyond) = (0.0, 0.0, 0.0);
    let (mut n_between, mut n_beyond) = (0usize, 0usize);
    let (mut stripe, mut n_stripe) = (0.0, 0usize);
    for i in 0..n {
        for j in 0..n {
            let (w, wp) = (s.omegas[i], s.omegas[j]);
            let v = s.dp[i * n + j];
            if w > edge || wp > edge {
                if w <= 1.5 * edge && wp <= 1.5 * edge {
                    beyond += v;
                    n_beyond += 1;
                }
            } else if w + wp > edge {
                between += v;
                n_between += 1;
            } else {
                primary += v;
                let h = (w + wp) / omega0;
                let q = (0.5 * h).round() * 2.0;
                if (h - q).abs() <= 0.25 && h >= h_start && h <= q_c {
                    stripe += v;
                    n_stripe += 1;
                }
            }
        }
    }
    let mean = |x: f64, k: usize| if k > 0 { x / k as f64 } else { 0.0 };
    PairCutoffStats {
        primary,
        between,
        beyond_box: beyond,
        between_mean: mean(between, n_between),
        beyond_box_mean: mean(beyond, n_beyond),
        plateau_stripe_mean: mean(stripe, n_stripe),
    }
}
