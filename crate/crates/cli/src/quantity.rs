//! Unit-annotated scalars used in config files, written as `"<number> <unit>"`.
//!
//! Each type stores its value in one fixed unit (atomic units unless noted)
//! and serializes back to that canonical unit.

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sfpg_core::units;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantityError {
    #[error("expected \"<number> <unit>\", got {0:?}")]
    Malformed(String),
    #[error("unknown {dimension} unit {unit:?} (allowed: {allowed})")]
    UnknownUnit {
        dimension: &'static str,
        unit: String,
        allowed: &'static str,
    },
}

fn split(text: &str) -> Result<(f64, &str), QuantityError> {
    let mut parts = text.split_whitespace();
    let (Some(num), Some(unit), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(QuantityError::Malformed(text.to_string()));
    };
    let value: f64 = num.parse().map_err(|_| QuantityError::Malformed(text.to_string()))?;
    if !value.is_finite() {
        return Err(QuantityError::Malformed(text.to_string()));
    }
    Ok((value, unit))
}

macro_rules! scalar_quantity {
    (
        $(#[$doc:meta])*
        $name:ident, $dimension:literal, canonical = $canon:literal,
        { $($unit:literal => $factor:expr),+ $(,)? }
    ) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
        pub struct $name(pub f64);

        impl $name {
            const ALLOWED: &'static str = concat!($($unit, " "),+);

            pub fn parse(text: &str) -> Result<Self, QuantityError> {
                let (value, unit) = split(text)?;
                let factor: f64 = match unit {
                    $($unit => $factor,)+
                    _ => {
                        return Err(QuantityError::UnknownUnit {
                            dimension: $dimension,
                            unit: unit.to_string(),
                            allowed: Self::ALLOWED.trim_end(),
                        })
                    }
                };
                Ok(Self(value * factor))
            }

            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:e} {}", self.0, $canon)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                Self::parse(&text).map_err(de::Error::custom)
            }
        }
    };
}

scalar_quantity!(
    /// Length in bohr.
    Length, "length", canonical = "bohr",
    {
        "bohr" => 1.0,
        "au" => 1.0,
        "nm" => units::metres_to_bohr(1e-9),
        "um" => units::metres_to_bohr(1e-6),
        "μm" => units::metres_to_bohr(1e-6),
        "mm" => units::metres_to_bohr(1e-3),
        "cm" => units::metres_to_bohr(1e-2),
        "m" => units::metres_to_bohr(1.0),
    }
);

scalar_quantity!(
    /// Peak intensity in W/cm^2.
    Intensity, "intensity", canonical = "W/cm^2",
    {
        "W/cm^2" => 1.0,
        "W/cm2" => 1.0,
        "TW/cm^2" => 1e12,
        "TW/cm2" => 1e12,
        "PW/cm^2" => 1e15,
        "PW/cm2" => 1e15,
    }
);

scalar_quantity!(
    /// Energy in hartree.
    Energy, "energy", canonical = "hartree",
    {
        "hartree" => 1.0,
        "Ha" => 1.0,
        "au" => 1.0,
        "eV" => 1.0 / units::HARTREE_EV,
    }
);

scalar_quantity!(
    /// Pressure in atm.
    Pressure, "pressure", canonical = "atm",
    {
        "atm" => 1.0,
        "bar" => 1e5 / units::ATM_PA,
        "mbar" => 1e2 / units::ATM_PA,
        "Pa" => 1.0 / units::ATM_PA,
        "kPa" => 1e3 / units::ATM_PA,
        "torr" => 1.0 / 760.0,
    }
);

scalar_quantity!(
    /// Temperature in kelvin.
    Temperature, "temperature", canonical = "K",
    { "K" => 1.0 }
);

scalar_quantity!(
    /// Angle in radians.
    Angle, "angle", canonical = "rad",
    {
        "rad" => 1.0,
        "mrad" => 1e-3,
        "deg" => std::f64::consts::PI / 180.0,
    }
);

/// A duration, either absolute or in drive periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Span {
    /// Atomic units of time.
    Au(f64),
    Periods(f64),
}

impl Span {
    pub fn parse(text: &str) -> Result<Self, QuantityError> {
        let (v, unit) = split(text)?;
        Ok(match unit {
            "au" => Span::Au(v),
            "as" => Span::Au(units::as_to_au_time(v)),
            "fs" => Span::Au(units::as_to_au_time(1e3 * v)),
            "T0" | "cycles" | "cycle" => Span::Periods(v),
            _ => {
                return Err(QuantityError::UnknownUnit {
                    dimension: "time",
                    unit: unit.to_string(),
                    allowed: "au as fs T0 cycles",
                })
            }
        })
    }

    /// Value in atomic units for a drive of period `t0`.
    pub fn au(self, t0: f64) -> f64 {
        match self {
            Span::Au(v) => v,
            Span::Periods(v) => v * t0,
        }
    }

    /// Value in drive periods.
    pub fn periods(self, t0: f64) -> f64 {
        match self {
            Span::Au(v) => v / t0,
            Span::Periods(v) => v,
        }
    }

    fn raw(self) -> f64 {
        match self {
            Span::Au(v) | Span::Periods(v) => v,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Span::Au(v) => write!(f, "{v:e} au"),
            Span::Periods(v) => write!(f, "{v:e} T0"),
        }
    }
}

/// An angular frequency, either absolute or as a multiple of the drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Frequency {
    Au(f64),
    Harmonic(f64),
}

impl Frequency {
    pub fn parse(text: &str) -> Result<Self, QuantityError> {
        let (v, unit) = split(text)?;
        Ok(match unit {
            "au" => Frequency::Au(v),
            "eV" => Frequency::Au(units::ev_to_au(v)),
            "w0" | "omega0" | "harmonic" => Frequency::Harmonic(v),
            _ => {
                return Err(QuantityError::UnknownUnit {
                    dimension: "frequency",
                    unit: unit.to_string(),
                    allowed: "au eV w0",
                })
            }
        })
    }

    pub fn au(self, omega0: f64) -> f64 {
        match self {
            Frequency::Au(v) => v,
            Frequency::Harmonic(v) => v * omega0,
        }
    }

    fn raw(self) -> f64 {
        match self {
            Frequency::Au(v) | Frequency::Harmonic(v) => v,
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Frequency::Au(v) => write!(f, "{v:e} au"),
            Frequency::Harmonic(v) => write!(f, "{v:e} w0"),
        }
    }
}

macro_rules! string_serde {
    ($name:ident) => {
        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                Self::parse(&text).map_err(de::Error::custom)
            }
        }

        impl $name {
            pub fn is_positive(self) -> bool {
                self.raw() > 0.0
            }
        }
    };
}

string_serde!(Span);
string_serde!(Frequency);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_units() {
        assert_eq!(Intensity::parse("200 TW/cm^2").unwrap().0, 2e14);
        assert!((Length::parse("1 mm").unwrap().0 - units::metres_to_bohr(1e-3)).abs() < 1e-6);
        assert_eq!(Angle::parse("5 mrad").unwrap().0, 5e-3);
        assert_eq!(Span::parse("12 cycles").unwrap(), Span::Periods(12.0));
        assert_eq!(Frequency::parse("20 w0").unwrap(), Frequency::Harmonic(20.0));
    }

    #[test]
    fn rejects_bare_numbers_and_wrong_dimensions() {
        assert!(matches!(Length::parse("800"), Err(QuantityError::Malformed(_))));
        assert!(matches!(
            Length::parse("800 W/cm^2"),
            Err(QuantityError::UnknownUnit { .. })
        ));
        assert!(matches!(Pressure::parse("nan atm"), Err(QuantityError::Malformed(_))));
    }

    #[test]
    fn canonical_text_round_trips() {
        let l = Length::parse("400 um").unwrap();
        assert_eq!(Length::parse(&l.to_string()).unwrap(), l);
        let s = Span::parse("0.12 T0").unwrap();
        assert_eq!(Span::parse(&s.to_string()).unwrap(), s);
    }
}
