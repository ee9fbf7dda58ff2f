//! Physical constants and unit conversions. Everything inside the crate is in
//! atomic units (hbar = m_e = e = 1) unless a name says otherwise.

use std::f64::consts::PI;

/// Fine structure constant.
pub const ALPHA: f64 = 1.0 / 137.035_999_084;
/// Speed of light in atomic units.
pub const C_AU: f64 = 137.035_999_084;
/// One Hartree in eV.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// One atomic unit of time in attoseconds.
pub const AU_TIME_AS: f64 = 24.188_843_265_857;
/// Bohr radius in metres.
pub const BOHR_M: f64 = 5.291_772_109_03e-11;
/// Intensity corresponding to a peak field of 1 a.u. (W/cm^2).
pub const AU_INTENSITY_W_CM2: f64 = 3.509e16;
/// hc in eV nm, used for wavelength <-> photon energy.
pub const HC_EV_NM: f64 = 1_239.841_984_332;
/// Boltzmann constant (J/K).
pub const K_BOLTZMANN: f64 = 1.380_649e-23;
/// One standard atmosphere in Pa.
pub const ATM_PA: f64 = 101_325.0;

pub fn ev_to_au(ev: f64) -> f64 {
    ev / HARTREE_EV
}

pub fn au_to_ev(au: f64) -> f64 {
    au * HARTREE_EV
}

/// Angular frequency (a.u.) of light with the given vacuum wavelength.
pub fn wavelength_nm_to_omega(nm: f64) -> f64 {
    ev_to_au(HC_EV_NM / nm)
}

pub fn omega_to_period(omega: f64) -> f64 {
    2.0 * PI / omega
}

pub fn au_time_to_as(t: f64) -> f64 {
    t * AU_TIME_AS
}

pub fn as_to_au_time(t: f64) -> f64 {
    t / AU_TIME_AS
}

pub fn metres_to_bohr(m: f64) -> f64 {
    m / BOHR_M
}

/// Ideal-gas number density in bohr^-3.
pub fn ideal_gas_density_au(pressure_atm: f64, temperature_k: f64) -> f64 {
    let per_m3 = pressure_atm * ATM_PA / (K_BOLTZMANN * temperature_k);
    per_m3 * BOHR_M.powi(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neon_800nm_photon_energy() {
        let w = wavelength_nm_to_omega(800.0);
        assert!((au_to_ev(w) - 1.5498).abs() < 1e-3);
        assert!((omega_to_period(w) - 110.32).abs() < 0.01);
    }

    #[test]
    fn loschmidt_scale_density() {
        // ~2.5e19 cm^-3 at 1 atm, 293 K
        let rho = ideal_gas_density_au(1.0, 293.0);
        let per_cm3 = rho / (BOHR_M * 100.0).powi(3);
        assert!((per_cm3 / 2.505e19 - 1.0).abs() < 1e-2);
    }
}
