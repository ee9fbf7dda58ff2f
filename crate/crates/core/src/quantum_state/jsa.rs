use num_complex::Complex64;

use crate::macroscopic::{DispersionModel, IndexConvention, InteractionGeometry};
use crate::spectra::PairAmplitude;
use crate::units::C_AU;

use super::QuantumError;

/// Normalized two-photon amplitude on a uniform frequency grid shared by
/// both axes. `sum |J|^2 domega^2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    pub omegas: Vec<f64>,
    /// Row-major: `values[i * n + j] = J(omegas[i], omegas[j])`.
    pub values: Vec<Complex64>,
    pub omega0: f64,
}

impl JointSpectralAmplitude {
    /// Wrap and normalize a grid. Fails on a zero or non-finite grid.
    pub fn from_grid(omegas: Vec<f64>, values: Vec<Complex64>, omega0: f64) -> Result<Self, QuantumError> {
        let n = omegas.len();
        if n < 2 || values.len() != n * n {
            return Err(QuantumError::Invalid(format!(
                "{} values for {n} frequencies",
                values.len()
            )));
        }
        let mut j = Self { omegas, values, omega0 };
        let norm = j.norm_sqr();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(QuantumError::EmptyAcceptance);
        }
        let s = norm.sqrt().recip();
        j.values.iter_mut().for_each(|z| *z *= s);
        Ok(j)
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn bin_width(&self) -> f64 {
        self.omegas[1] - self.omegas[0]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.len() + j]
    }

    pub fn norm_sqr(&self) -> f64 {
        let dw = self.bin_width();
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dw * dw
    }

    /// Largest `|J(w, w') - J(w', w)|` relative to `max |J|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        let mut peak = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).norm());
                peak = peak.max(self.get(i, j).norm());
            }
        }
        if peak > 0.0 {
            worst / peak
        } else {
            0.0
        }
    }

    /// `(J + J^T) / 2`, renormalized.
    pub fn symmetrized(&self) -> Result<Self, QuantumError> {
        let n = self.len();
        let mut v = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = 0.5 * (self.get(i, j) + self.get(j, i));
            }
        }
        Self::from_grid(self.omegas.clone(), v, self.omega0)
    }

    /// Nearest sum-frequency order of cell `(i, j)`.
    pub fn order_of(&self, i: usize, j: usize) -> i64 {
        ((self.omegas[i] + self.omegas[j]) / self.omega0).round() as i64
    }

    /// Nearest even sum-frequency order of cell `(i, j)`; every cell
    /// belongs to exactly one stripe.
    pub fn stripe_of(&self, i: usize, j: usize) -> i64 {
        2 * ((self.omegas[i] + self.omegas[j]) / (2.0 * self.omega0)).round() as i64
    }

    /// Keep only cells whose stripe is accepted, then renormalize.
    pub fn restricted(&self, keep: impl Fn(i64) -> bool) -> Result<Self, QuantumError> {
        let n = self.len();
        let mut v = self.values.clone();
        for i in 0..n {
            for j in 0..n {
                if !keep(self.stripe_of(i, j)) {
                    v[i * n + j] = Complex64::default();
                }
            }
        }
        Self::from_grid(self.omegas.clone(), v, self.omega0)
    }

    /// Probability carried by each stripe, ascending in order.
    pub fn stripe_weights(&self) -> Vec<(i64, f64)> {
        let n = self.len();
        let dw2 = self.bin_width().powi(2);
        let mut out: std::collections::BTreeMap<i64, f64> = Default::default();
        for i in 0..n {
            for j in 0..n {
                *out.entry(self.stripe_of(i, j)).or_default() += self.get(i, j).norm_sqr() * dw2;
            }
        }
        out.into_iter().collect()
    }
}

/// Aperture-averaged longitudinal phase matching applied as an amplitude
/// factor `<sinc(dk_z L / 2)>_theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMatchingMask {
    pub model: DispersionModel,
    pub geom: InteractionGeometry,
    /// Collection angle of the photon at `omega` (rad).
    pub theta_center: f64,
    pub half_aperture: f64,
    pub n_theta: usize,
    pub convention: IndexConvention,
}

impl PhaseMatchingMask {
    fn factor(&self, omega0: f64, omega: f64, omega_p: f64) -> f64 {
        let q = ((omega + omega_p) / omega0 / 2.0).round() * 2.0;
        if q < 2.0 {
            return 0.0;
        }
        let k0 = self.model.pump_index(omega0) * omega0 / C_AU;
        let n = self.model.emitted_index(omega);
        let n_p = match self.convention {
            IndexConvention::Shared => n,
            IndexConvention::PerPhoton => self.model.emitted_index(omega_p),
        };
        let (k, kp) = (n * omega / C_AU, n_p * omega_p / C_AU);
        let m = self.n_theta.max(1);
        let mut acc = 0.0;
        for a in 0..m {
            let th = if m == 1 {
                self.theta_center
            } else {
                self.theta_center + self.half_aperture * (2.0 * a as f64 / (m - 1) as f64 - 1.0)
            };
            let s = k * th.sin() / kp;
            if s.abs() > 1.0 {
                continue;
            }
            let dk = q * k0 - k * th.cos() - kp * (1.0 - s * s).sqrt();
            let x = 0.5 * dk * self.geom.length;
            acc += if x.abs() < 1e-8 { 1.0 } else { x.sin() / x };
        }
        acc / m as f64
    }
}

/// Collection settings: the frequency band seen by both arms, an optional
/// phase-matching mask and an optional whitelist of sum-frequency orders.
#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub band: (f64, f64),
    pub omega0: f64,
    pub phase_matching: Option<PhaseMatchingMask>,
    pub orders: Option<Vec<i64>>,
}

/// `J ~ (w w')^{3/2} C(w, w') * mask`, symmetrized under exchange and
/// normalized. The complex phase of `C` is kept.
pub fn build_jsa(amp: &PairAmplitude, collection: &Collection) -> Result<JointSpectralAmplitude, QuantumError> {
    let (lo, hi) = collection.band;
    let idx: Vec<usize> = (0..amp.len())
        .filter(|&i| amp.omegas[i] >= lo && amp.omegas[i] <= hi && amp.omegas[i] > 0.0)
        .collect();
    if idx.len() < 2 {
        return Err(QuantumError::EmptyAcceptance);
    }
    let w0 = collection.omega0;
    let n = idx.len();
    let omegas: Vec<f64> = idx.iter().map(|&i| amp.omegas[i]).collect();
    let mut values = vec![Complex64::default(); n * n];
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            let (w, wp) = (omegas[a], omegas[b]);
            if let Some(keep) = &collection.orders {
                if !keep.contains(&(((w + wp) / w0).round() as i64)) {
                    continue;
                }
            }
            let mut f = (w * wp).powf(1.5);
            if let Some(pm) = &collection.phase_matching {
                f *= pm.factor(w0, w, wp);
            }
            values[a * n + b] = amp.get(i, j) * f;
        }
    }
    JointSpectralAmplitude::from_grid(omegas, values, w0)?.symmetrized()
}
