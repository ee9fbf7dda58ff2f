use std::f64::consts::PI;

use crate::units::{self, C_AU, HARTREE_EV, HC_EV_NM};

use super::MacroError;

/// First zero of `J_0`, the EH11 mode constant of a hollow capillary.
pub const EH11_ROOT: f64 = 2.405;
/// Reference temperature of the tabulated neutral-gas dispersion (K).
const TABLE_TEMPERATURE_K: f64 = 273.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GasSpecies {
    He,
    Ne,
    Ar,
    Kr,
    Xe,
}

impl GasSpecies {
    pub const ALL: [GasSpecies; 5] = [Self::He, Self::Ne, Self::Ar, Self::Kr, Self::Xe];

    pub fn name(&self) -> &'static str {
        match self {
            Self::He => "He",
            Self::Ne => "Ne",
            Self::Ar => "Ar",
            Self::Kr => "Kr",
            Self::Xe => "Xe",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name().eq_ignore_ascii_case(s))
    }

    /// `(B_i, C_i)` with `n - 1 = sum B_i / (C_i - lambda^-2)`, lambda in um,
    /// at 0 C and 1 atm.
    fn sellmeier(&self) -> &'static [(f64, f64)] {
        match self {
            Self::He => &[(0.014_700_91, 423.98)],
            Self::Ne => &[(0.001_281_45, 184.661), (0.022_048_6, 376.840)],
            Self::Ar => &[(2.501_41e-3, 91.012), (5.002_83e-4, 87.892), (5.223_43e-2, 214.02)],
            Self::Kr => &[(0.002_536_37, 65.4742), (0.002_736_49, 73.698), (0.062_080_2, 181.08)],
            Self::Xe => &[(0.003_228_69, 46.301), (0.003_553_93, 50.578), (0.060_676_4, 112.74)],
        }
    }

    /// Neutral refractivity `n - 1` at 0 C and 1 atm for the given angular
    /// frequency (a.u.). Only meaningful below the first resonance.
    pub fn refractivity_stp(&self, omega: f64) -> f64 {
        let lambda_um = HC_EV_NM / (omega * HARTREE_EV) * 1e-3;
        let inv2 = lambda_um.powi(-2);
        self.sellmeier().iter().map(|(b, c)| b / (c - inv2)).sum()
    }
}

/// Refractive indices inside a gas-filled capillary.
///
/// The pump sees neutral dispersion (pressure and temperature scaled), the
/// free-electron plasma and the EH11 waveguide term. Emitted photons see only
/// the plasma and waveguide terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionModel {
    pub species: GasSpecies,
    pub pressure_atm: f64,
    pub ionization_fraction: f64,
    /// Capillary radius (bohr).
    pub radius: f64,
    pub mode_constant: f64,
    pub temperature_k: f64,
}

impl DispersionModel {
    pub fn new(
        species: GasSpecies,
        pressure_atm: f64,
        ionization_fraction: f64,
        radius: f64,
        temperature_k: f64,
    ) -> Result<Self, MacroError> {
        let m = Self {
            species,
            pressure_atm,
            ionization_fraction,
            radius,
            mode_constant: EH11_ROOT,
            temperature_k,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), MacroError> {
        let ok = self.pressure_atm >= 0.0
            && (0.0..=1.0).contains(&self.ionization_fraction)
            && self.radius > 0.0
            && self.mode_constant >= 0.0
            && self.temperature_k > 0.0;
        if ok {
            Ok(())
        } else {
            Err(MacroError::InvalidModel(format!("{self:?}")))
        }
    }

    pub fn with_pressure(&self, pressure_atm: f64) -> Self {
        Self { pressure_atm, ..*self }
    }

    pub fn with_ionization(&self, ionization_fraction: f64) -> Self {
        Self {
            ionization_fraction,
            ..*self
        }
    }

    /// Atom number density (bohr^-3).
    pub fn density(&self) -> f64 {
        units::ideal_gas_density_au(self.pressure_atm, self.temperature_k)
    }

    pub fn plasma_frequency_sq(&self) -> f64 {
        4.0 * PI * self.ionization_fraction * self.density()
    }

    pub fn neutral_term(&self, omega: f64) -> f64 {
        self.species.refractivity_stp(omega) * self.pressure_atm * TABLE_TEMPERATURE_K / self.temperature_k
    }

    pub fn plasma_term(&self, omega: f64) -> f64 {
        -self.plasma_frequency_sq() / (2.0 * omega * omega)
    }

    pub fn waveguide_term(&self, omega: f64) -> f64 {
        let u = self.mode_constant;
        -(u * u * C_AU * C_AU) / (2.0 * self.radius * self.radius * omega * omega)
    }

    /// `n(omega_0)` of the driving field.
    pub fn pump_index(&self, omega: f64) -> f64 {
        1.0 + self.neutral_term(omega) + self.plasma_term(omega) + self.waveguide_term(omega)
    }

    /// `n(omega)` of an emitted photon.
    pub fn emitted_index(&self, omega: f64) -> f64 {
        1.0 + self.plasma_term(omega) + self.waveguide_term(omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neon_refractivity_at_800nm() {
        let w = units::wavelength_nm_to_omega(800.0);
        let r = GasSpecies::Ne.refractivity_stp(w);
        assert!((r - 6.57e-5).abs() < 0.05e-5, "{r}");
    }

    #[test]
    fn index_tends_to_one_without_contributions() {
        let m = DispersionModel {
            species: GasSpecies::Ar,
            pressure_atm: 0.0,
            ionization_fraction: 0.0,
            radius: 1e6,
            mode_constant: 0.0,
            temperature_k: 293.0,
        };
        assert_eq!(m.pump_index(0.057), 1.0);
        assert_eq!(m.emitted_index(1.0), 1.0);
    }

    #[test]
    fn species_names_round_trip() {
        for g in GasSpecies::ALL {
            assert_eq!(GasSpecies::from_name(g.name()), Some(g));
        }
        assert_eq!(GasSpecies::from_name("neon"), None);
    }

    #[test]
    fn rejects_bad_ionization_fraction() {
        assert!(DispersionModel::new(GasSpecies::Ne, 1.0, 1.5, 1e6, 293.0).is_err());
    }
}
