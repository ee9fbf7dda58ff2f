use std::f64::consts::PI;

use rayon::prelude::*;

use crate::spectra::PairSpectrum;
use crate::units::{self, C_AU, HARTREE_EV};

use super::phase::{mismatch_from_wavevectors, sinc_sq, IndexConvention};
use super::{DispersionModel, MacroError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionGeometry {
    /// Medium length (bohr).
    pub length: f64,
    /// Capillary radius (bohr).
    pub radius: f64,
    /// Atom number density (bohr^-3).
    pub density: f64,
    /// Pump photons per shot; only used for efficiency reports.
    pub pump_photons: f64,
}

impl InteractionGeometry {
    /// Geometry in lab units with the density taken from the gas model.
    pub fn new(length_mm: f64, radius_um: f64, model: &DispersionModel, pump_photons: f64) -> Result<Self, MacroError> {
        let g = Self {
            length: units::metres_to_bohr(length_mm * 1e-3),
            radius: units::metres_to_bohr(radius_um * 1e-6),
            density: model.density(),
            pump_photons,
        };
        if !(g.length > 0.0 && g.radius > 0.0 && g.density > 0.0) {
            return Err(MacroError::InvalidModel(format!("{g:?}")));
        }
        Ok(g)
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        self.area() * self.length
    }

    pub fn atom_number(&self) -> f64 {
        self.density * self.volume()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YieldOptions {
    pub omega0: f64,
    /// Angles (rad) at which the map is evaluated, ascending.
    pub thetas: Vec<f64>,
    /// Emitted band (a.u.); defaults to the whole spectrum.
    pub band: Option<(f64, f64)>,
    /// Overall proportionality constant of the assembly.
    pub calibration: f64,
    pub convention: IndexConvention,
    /// Restrict the assembly to these stripe orders; all even orders if unset.
    pub orders: Option<Vec<u32>>,
}

impl YieldOptions {
    pub fn uniform_thetas(theta_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|j| theta_max * j as f64 / (n - 1).max(1) as f64).collect()
    }
}

/// Per-stripe contribution to a yield map.
#[derive(Debug, Clone, PartialEq)]
pub struct StripeYield {
    pub q: u32,
    /// Integrated pairs per shot from this stripe.
    pub counts: f64,
    /// Stripe strength `S_q(omega)` per map frequency.
    pub strength: Vec<f64>,
    /// Intensity-weighted partner frequency per map frequency (0 when empty).
    pub partner_centroid: Vec<f64>,
}

/// `dN/(domega dtheta)` on an (omega, theta) grid, row-major in omega.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularYieldMap {
    pub omegas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub dn: Vec<f64>,
    /// Stripe order carrying most of each cell, 0 where the cell is empty.
    pub dominant_q: Vec<u32>,
    pub stripes: Vec<StripeYield>,
    pub omega0: f64,
}

impl AngularYieldMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.dn[i * self.thetas.len() + j]
    }

    pub fn omega_slice(&self, i: usize) -> &[f64] {
        let n = self.thetas.len();
        &self.dn[i * n..(i + 1) * n]
    }

    pub fn theta_slice(&self, j: usize) -> Vec<f64> {
        (0..self.omegas.len()).map(|i| self.get(i, j)).collect()
    }

    fn cell_weights(&self) -> (Vec<f64>, Vec<f64>) {
        (trapezoid_weights(&self.omegas), trapezoid_weights(&self.thetas))
    }

    /// Pairs per shot over the whole map.
    pub fn total_counts(&self) -> f64 {
        let (wo, wt) = self.cell_weights();
        let n = self.thetas.len();
        (0..self.omegas.len())
            .map(|i| wo[i] * (0..n).map(|j| wt[j] * self.dn[i * n + j]).sum::<f64>())
            .sum()
    }

    /// Photon counts integrated over angle and binned by frequency, with bin
    /// edges `start + k * width`.
    pub fn counts_in_bands(&self, start: f64, width: f64) -> Vec<(f64, f64)> {
        let (wo, wt) = self.cell_weights();
        let n = self.thetas.len();
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, w) in self.omegas.iter().enumerate() {
            let k = ((w - start) / width).floor();
            if k < 0.0 {
                continue;
            }
            let k = k as usize;
            if out.len() <= k {
                out.extend((out.len()..=k).map(|m| (start + (m as f64 + 0.5) * width, 0.0)));
            }
            out[k].1 += wo[i] * (0..n).map(|j| wt[j] * self.dn[i * n + j]).sum::<f64>();
        }
        out
    }

    /// Counts per harmonic band `[h - 1/2, h + 1/2) omega0`, keyed by `h`.
    pub fn counts_per_harmonic(&self) -> Vec<(f64, f64)> {
        self.counts_in_bands(0.5 * self.omega0, self.omega0)
            .into_iter()
            .map(|(c, v)| (c / self.omega0, v))
            .collect()
    }

    /// Counts per 1 eV band, keyed by the band centre in eV.
    pub fn counts_per_ev(&self) -> Vec<(f64, f64)> {
        self.counts_in_bands(0.0, units::ev_to_au(1.0))
            .into_iter()
            .map(|(c, v)| (c * HARTREE_EV, v))
            .collect()
    }
}

impl AngularYieldMap {
    /// Comb at a fixed angle: the largest `dN` within `0.3 omega0` of each
    /// harmonic `h omega0`, as `(h, peak)`.
    pub fn comb_at(&self, theta_index: usize) -> Vec<(usize, f64)> {
        let col = self.theta_slice(theta_index);
        let top = self.omegas.last().copied().unwrap_or(0.0) / self.omega0;
        (1..=top.floor() as usize)
            .map(|h| {
                let peak = self
                    .omegas
                    .iter()
                    .zip(&col)
                    .filter(|(w, _)| (*w / self.omega0 - h as f64).abs() <= 0.3)
                    .map(|(_, v)| *v)
                    .fold(0.0, f64::max);
                (h, peak)
            })
            .collect()
    }
}

/// Last harmonic of the efficient part of a comb: the comb (rolling median
/// of three in log scale) is compared with its median over `plateau`, and the
/// edge sits just before the first harmonic beyond the plateau that falls
/// more than `decades` below it.
pub fn comb_edge(comb: &[(usize, f64)], plateau: (usize, usize), decades: f64) -> Option<usize> {
    let logs: Vec<(usize, f64)> = comb
        .iter()
        .map(|&(h, v)| (h, if v > 0.0 { v.log10() } else { f64::NEG_INFINITY }))
        .collect();
    let smooth: Vec<(usize, f64)> = (0..logs.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 2).min(logs.len());
            let mut w: Vec<f64> = logs[lo..hi].iter().map(|x| x.1).collect();
            w.sort_by(f64::total_cmp);
            (logs[i].0, w[w.len() / 2])
        })
        .collect();
    let mut base: Vec<f64> = smooth
        .iter()
        .filter(|(h, _)| *h >= plateau.0 && *h <= plateau.1)
        .map(|x| x.1)
        .collect();
    if base.is_empty() {
        return None;
    }
    base.sort_by(f64::total_cmp);
    let level = base[base.len() / 2];
    smooth
        .iter()
        .find(|(h, v)| *h > plateau.1 && *v < level - decades)
        .map(|(h, _)| h - 1)
}

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| {
            let lo = if i == 0 { x[0] } else { 0.5 * (x[i - 1] + x[i]) };
            let hi = if i == n - 1 { x[n - 1] } else { 0.5 * (x[i] + x[i + 1]) };
            hi - lo
        })
        .collect()
}

/// Phase-matched pair yield per unit frequency and emission angle.
///
/// `dN/(domega dtheta) = kappa (rho V)^2 sum_q S_q(omega) sinc^2(dk_z L / 2)`,
/// where `S_q(omega)` integrates the single-atom pair spectrum across the
/// stripe `|omega + omega' - q omega0| <= omega0` (even `q`), the partner
/// angle balances transverse momentum, and the angular density is planar
/// (uniform per unit angle). With `sinc^2 = 1` every angle carries the
/// frequency marginal of the pair spectrum.
pub fn angular_yield(
    pair: &PairSpectrum,
    geom: &InteractionGeometry,
    model: &DispersionModel,
    opts: &YieldOptions,
) -> Result<AngularYieldMap, MacroError> {
    let rel = (geom.density - model.density()).abs() / model.density().max(f64::MIN_POSITIVE);
    if rel > 1e-12 || (geom.radius - model.radius).abs() > 1e-9 * model.radius {
        return Err(MacroError::GeometryMismatch);
    }
    let w0 = opts.omega0;
    let top = *pair.omegas.last().unwrap_or(&0.0);
    let (lo, hi) = opts.band.unwrap_or((pair.omegas.get(1).copied().unwrap_or(0.0), top));
    if !(lo > 0.0 && hi <= top * (1.0 + 1e-12) && lo < hi) {
        return Err(MacroError::BandMismatch { lo, hi, available: top });
    }
    let rows: Vec<usize> = (0..pair.len())
        .filter(|&i| pair.omegas[i] >= lo && pair.omegas[i] <= hi)
        .collect();
    let omegas: Vec<f64> = rows.iter().map(|&i| pair.omegas[i]).collect();
    let dw = pair.bin_width();

    // Stripe strengths: every bin belongs to the nearest even order.
    let q_max = (2.0 * top / w0 / 2.0).ceil() as u32 * 2;
    let n_q = (q_max / 2) as usize + 1;
    let mut strength = vec![vec![0.0; omegas.len()]; n_q];
    let mut partner = vec![vec![0.0; omegas.len()]; n_q];
    let accepted = |k: usize| opts.orders.as_ref().is_none_or(|o| o.contains(&(2 * k as u32)));
    for (r, &i) in rows.iter().enumerate() {
        for j in 0..pair.len() {
            let v = pair.get(i, j);
            if v == 0.0 {
                continue;
            }
            let s = (pair.omegas[i] + pair.omegas[j]) / w0;
            let k = (0.5 * s).round() as usize;
            if !accepted(k) {
                continue;
            }
            strength[k][r] += v * dw;
            partner[k][r] += v * dw * pair.omegas[j];
        }
    }
    for k in 0..n_q {
        for r in 0..omegas.len() {
            if strength[k][r] > 0.0 {
                partner[k][r] /= strength[k][r];
            }
        }
    }

    let scale = opts.calibration * geom.atom_number().powi(2);
    let n0 = model.pump_index(w0);
    let k0 = n0 * w0 / C_AU;
    let n_t = opts.thetas.len();
    let cells: Vec<(Vec<f64>, Vec<u32>)> = (0..omegas.len())
        .into_par_iter()
        .map(|r| {
            let w = omegas[r];
            let k = model.emitted_index(w) * w / C_AU;
            let mut row = vec![0.0; n_t];
            let mut best = vec![0.0f64; n_t];
            let mut best_q = vec![0u32; n_t];
            for (kq, s) in strength.iter().enumerate() {
                let q = 2 * kq as u32;
                let wp = q as f64 * w0 - w;
                if s[r] <= 0.0 || q == 0 || wp <= 0.0 {
                    continue;
                }
                let n_p = match opts.convention {
                    IndexConvention::Shared => model.emitted_index(w),
                    IndexConvention::PerPhoton => model.emitted_index(wp),
                };
                let kp = n_p * wp / C_AU;
                for (j, &th) in opts.thetas.iter().enumerate() {
                    if let Some(m) = mismatch_from_wavevectors(q as f64 * k0, k, kp, th, None) {
                        let v = scale * s[r] * sinc_sq(0.5 * m.dk_z * geom.length);
                        row[j] += v;
                        if v > best[j] {
                            best[j] = v;
                            best_q[j] = q;
                        }
                    }
                }
            }
            (row, best_q)
        })
        .collect();

    let mut dn = Vec::with_capacity(omegas.len() * n_t);
    let mut dominant_q = Vec::with_capacity(omegas.len() * n_t);
    for (row, q) in cells {
        dn.extend(row);
        dominant_q.extend(q);
    }
    let mut map = AngularYieldMap {
        omegas,
        thetas: opts.thetas.clone(),
        dn,
        dominant_q,
        stripes: Vec::new(),
        omega0: w0,
    };
    map.stripes = stripe_counts(&map, &strength, &partner, geom, model, opts);
    Ok(map)
}

fn stripe_counts(
    map: &AngularYieldMap,
    strength: &[Vec<f64>],
    partner: &[Vec<f64>],
    geom: &InteractionGeometry,
    model: &DispersionModel,
    opts: &YieldOptions,
) -> Vec<StripeYield> {
    let (wo, wt) = map.cell_weights();
    let scale = opts.calibration * geom.atom_number().powi(2);
    let w0 = opts.omega0;
    let k0 = model.pump_index(w0) * w0 / C_AU;
    strength
        .iter()
        .enumerate()
        .filter(|(kq, s)| *kq > 0 && s.iter().any(|v| *v > 0.0))
        .map(|(kq, s)| {
            let q = 2 * kq as u32;
            let mut counts = 0.0;
            for (r, &w) in map.omegas.iter().enumerate() {
                let wp = q as f64 * w0 - w;
                if s[r] <= 0.0 || wp <= 0.0 {
                    continue;
                }
                let k = model.emitted_index(w) * w / C_AU;
                let n_p = match opts.convention {
                    IndexConvention::Shared => model.emitted_index(w),
                    IndexConvention::PerPhoton => model.emitted_index(wp),
                };
                let kp = n_p * wp / C_AU;
                let ang: f64 = map
                    .thetas
                    .iter()
                    .zip(&wt)
                    .filter_map(|(&th, &wj)| {
                        mismatch_from_wavevectors(q as f64 * k0, k, kp, th, None)
                            .map(|m| wj * sinc_sq(0.5 * m.dk_z * geom.length))
                    })
                    .sum();
                counts += wo[r] * scale * s[r] * ang;
            }
            StripeYield {
                q,
                counts,
                strength: s.clone(),
                partner_centroid: partner[kq].clone(),
            }
        })
        .collect()
}
