use std::f64::consts::PI;

use crate::units::{self, AU_INTENSITY_W_CM2};

use super::TdseError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeKind {
    /// `sin^2(pi t / T)` over the whole pulse.
    SinSquared,
    /// Linear ramps of `ramp_cycles` at both ends around a flat top.
    Trapezoidal { ramp_cycles: f64 },
    /// Constant amplitude for the whole duration.
    Flat,
}

impl EnvelopeKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvelopeKind::SinSquared => "sin2",
            EnvelopeKind::Trapezoidal { .. } => "trapezoidal",
            EnvelopeKind::Flat => "flat",
        }
    }
}

/// Linearly polarized drive
/// `E(t) = E0 f(t) cos(omega0 (t - T/2) + cep)` on `0 <= t <= T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserPulse {
    wavelength_nm: f64,
    peak_intensity_w_cm2: f64,
    n_cycles: f64,
    envelope: EnvelopeKind,
    cep: f64,
}

impl LaserPulse {
    pub fn new(
        wavelength_nm: f64,
        peak_intensity_w_cm2: f64,
        n_cycles: f64,
        envelope: EnvelopeKind,
        cep: f64,
    ) -> Result<Self, TdseError> {
        if !(wavelength_nm > 0.0) || !(peak_intensity_w_cm2 >= 0.0) || !(n_cycles > 0.0) {
            return Err(TdseError::InvalidPulse(format!(
                "wavelength {wavelength_nm} nm, intensity {peak_intensity_w_cm2} W/cm2, \
                 {n_cycles} cycles"
            )));
        }
        if let EnvelopeKind::Trapezoidal { ramp_cycles } = envelope {
            if !(ramp_cycles > 0.0) || 2.0 * ramp_cycles > n_cycles {
                return Err(TdseError::InvalidPulse(format!(
                    "ramp of {ramp_cycles} cycles does not fit in {n_cycles} cycles"
                )));
            }
        }
        Ok(Self {
            wavelength_nm,
            peak_intensity_w_cm2,
            n_cycles,
            envelope,
            cep,
        })
    }

    /// The field-free "pulse" of a given duration; useful as a control.
    pub fn field_free(wavelength_nm: f64, n_cycles: f64) -> Result<Self, TdseError> {
        Self::new(wavelength_nm, 0.0, n_cycles, EnvelopeKind::Flat, 0.0)
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }

    pub fn peak_intensity_w_cm2(&self) -> f64 {
        self.peak_intensity_w_cm2
    }

    pub fn n_cycles(&self) -> f64 {
        self.n_cycles
    }

    pub fn envelope(&self) -> EnvelopeKind {
        self.envelope
    }

    pub fn cep(&self) -> f64 {
        self.cep
    }

    pub fn omega0(&self) -> f64 {
        units::wavelength_nm_to_omega(self.wavelength_nm)
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega0()
    }

    pub fn duration(&self) -> f64 {
        self.n_cycles * self.period()
    }

    pub fn e0(&self) -> f64 {
        (self.peak_intensity_w_cm2 / AU_INTENSITY_W_CM2).sqrt()
    }

    /// Cycle-averaged ponderomotive energy `E0^2 / (4 omega0^2)` (a.u.).
    pub fn up(&self) -> f64 {
        let w = self.omega0();
        self.e0().powi(2) / (4.0 * w * w)
    }

    /// The literal `e^2 E0^2 / (2 m omega0^2)` form, twice [`Self::up`]; kept
    /// for logging next to the convention actually used.
    pub fn up_literal(&self) -> f64 {
        2.0 * self.up()
    }

    pub fn up_ev(&self) -> f64 {
        units::au_to_ev(self.up())
    }

    pub fn envelope_at(&self, t: f64) -> f64 {
        let total = self.duration();
        if !(0.0..=total).contains(&t) {
            return 0.0;
        }
        match self.envelope {
            EnvelopeKind::SinSquared => (PI * t / total).sin().powi(2),
            EnvelopeKind::Flat => 1.0,
            EnvelopeKind::Trapezoidal { ramp_cycles } => {
                let ramp = ramp_cycles * self.period();
                if t < ramp {
                    t / ramp
                } else if t > total - ramp {
                    (total - t) / ramp
                } else {
                    1.0
                }
            }
        }
    }

    pub fn field(&self, t: f64) -> f64 {
        if self.peak_intensity_w_cm2 == 0.0 {
            return 0.0;
        }
        let centre = 0.5 * self.duration();
        self.e0() * self.envelope_at(t) * (self.omega0() * (t - centre) + self.cep).cos()
    }
}
