use crate::units::C_AU;

use super::{DispersionModel, InteractionGeometry, MacroError};

/// Which refractive index the two emitted photons see.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexConvention {
    /// Both photons use `n(omega)`; consistent with the closed-form angle.
    Shared,
    /// Each photon uses the index at its own frequency.
    #[default]
    PerPhoton,
}

/// `cos(theta)` from energy and momentum conservation for a pair
/// `omega + omega' = q omega0` with equal emitted indices `n`.
pub fn emission_cosine(q: f64, omega: f64, omega0: f64, n: f64, n0: f64) -> f64 {
    let qw = q * omega0;
    (n * n * (2.0 * omega - qw) + n0 * n0 * qw) / (2.0 * n * n0 * omega)
}

/// Emission angle of the photon at `omega` for explicit indices.
pub fn emission_angle_with(q: f64, omega: f64, omega0: f64, n: f64, n0: f64) -> Result<f64, MacroError> {
    if !(omega > 0.0 && omega < q * omega0) {
        return Err(MacroError::DomainError(format!(
            "omega = {omega} outside (0, {}) for q = {q}",
            q * omega0
        )));
    }
    let c = emission_cosine(q, omega, omega0, n, n0);
    if !(-1.0..=1.0).contains(&c) {
        return Err(MacroError::NoSolution { q, omega, cosine: c });
    }
    Ok(c.acos())
}

/// Phase-matched emission angle for harmonic order `q` (even), using
/// `n = n(omega)` for both photons.
pub fn emission_angle(q: u32, omega: f64, omega0: f64, model: &DispersionModel) -> Result<f64, MacroError> {
    if q < 2 || !q.is_multiple_of(2) {
        return Err(MacroError::DomainError(format!("q = {q} must be even and >= 2")));
    }
    emission_angle_with(
        q as f64,
        omega,
        omega0,
        model.emitted_index(omega),
        model.pump_index(omega0),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMismatch {
    /// `q k0 - k cos(theta) - k' cos(theta')` (bohr^-1).
    pub dk_z: f64,
    /// `k sin(theta) - k' sin(theta')`.
    pub dk_perp: f64,
    pub theta_prime: f64,
}

impl PhaseMismatch {
    /// Longitudinal coherence factor `sinc^2(dk_z L / 2)`.
    pub fn coherence(&self, length: f64) -> f64 {
        sinc_sq(0.5 * self.dk_z * length)
    }
}

pub fn sinc_sq(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 3.0
    } else {
        (x.sin() / x).powi(2)
    }
}

/// Wavevector mismatch of the pair `(omega, q omega0 - omega)` emitted at
/// `(theta, theta')`. With `theta_prime = None` the partner angle balances
/// transverse momentum; `None` is returned when no such angle exists.
#[allow(clippy::too_many_arguments)]
pub fn phase_mismatch(
    q: f64,
    omega: f64,
    omega0: f64,
    theta: f64,
    theta_prime: Option<f64>,
    model: &DispersionModel,
    convention: IndexConvention,
) -> Result<Option<PhaseMismatch>, MacroError> {
    let omega_p = q * omega0 - omega;
    if !(omega > 0.0 && omega_p > 0.0) {
        return Err(MacroError::DomainError(format!(
            "omega = {omega} outside (0, {}) for q = {q}",
            q * omega0
        )));
    }
    let n = model.emitted_index(omega);
    let n_p = match convention {
        IndexConvention::Shared => n,
        IndexConvention::PerPhoton => model.emitted_index(omega_p),
    };
    let k0 = model.pump_index(omega0) * omega0 / C_AU;
    let k = n * omega / C_AU;
    let kp = n_p * omega_p / C_AU;
    Ok(mismatch_from_wavevectors(q * k0, k, kp, theta, theta_prime))
}

pub(crate) fn mismatch_from_wavevectors(
    qk0: f64,
    k: f64,
    kp: f64,
    theta: f64,
    theta_prime: Option<f64>,
) -> Option<PhaseMismatch> {
    let theta_prime = match theta_prime {
        Some(t) => t,
        None => {
            let s = k * theta.sin() / kp;
            if s.abs() > 1.0 {
                return None;
            }
            -s.asin()
        }
    };
    Some(PhaseMismatch {
        dk_z: qk0 - k * theta.cos() - kp * theta_prime.cos(),
        dk_perp: k * theta.sin() + kp * theta_prime.sin(),
        theta_prime,
    })
}

/// Collinear harmonic mismatch `(q n0 omega0 - n(omega) omega) / c` with
/// `q = omega / omega0`.
pub fn hhg_mismatch(model: &DispersionModel, omega: f64, omega0: f64) -> f64 {
    omega * (model.pump_index(omega0) - model.emitted_index(omega)) / C_AU
}

/// Background suppression figure of merit `sinc^2(dk_HHG L / 2)`.
pub fn hhg_suppression_ratio(model: &DispersionModel, geom: &InteractionGeometry, omega: f64, omega0: f64) -> f64 {
    sinc_sq(0.5 * hhg_mismatch(model, omega, omega0) * geom.length)
}

/// Ionization fraction that puts the degenerate pair of order `q` at the
/// angle `theta`, holding everything else in `model` fixed. Both indices are
/// affine in the fraction, so the condition `n0 = n cos(theta)` is solved
/// exactly.
pub fn ionization_for_degenerate_angle(
    model: &DispersionModel,
    q: u32,
    omega0: f64,
    theta: f64,
) -> Result<f64, MacroError> {
    let omega = 0.5 * q as f64 * omega0;
    let base = model.with_ionization(0.0);
    let unit = model.with_ionization(1.0);
    let (a0, b0) = (
        base.pump_index(omega0),
        unit.pump_index(omega0) - base.pump_index(omega0),
    );
    let (a, b) = (
        base.emitted_index(omega),
        unit.emitted_index(omega) - base.emitted_index(omega),
    );
    let c = theta.cos();
    let eta = (a0 - c * a) / (c * b - b0);
    if (0.0..=1.0).contains(&eta) {
        Ok(eta)
    } else {
        Err(MacroError::NoSolution {
            q: q as f64,
            omega,
            cosine: c,
        })
    }
}
