//! Run configuration: TOML with unit-annotated quantities and strict keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sfpg_core::macroscopic::{GasSpecies, IndexConvention};
use sfpg_core::spectra::WindowKind;
use sfpg_core::tdse::EnvelopeKind;
use sfpg_core::units;
use sha2::{Digest, Sha256};

use crate::quantity::{Angle, Energy, Frequency, Intensity, Length, Pressure, Span, Temperature};

/// Presets shipped with the binary, addressable as `preset:<name>`.
pub const PRESETS: [(&str, &str); 3] = [
    ("neon", include_str!("../presets/neon.toml")),
    ("waveguide", include_str!("../presets/waveguide.toml")),
    ("hom", include_str!("../presets/hom.toml")),
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown preset {0:?} (available: neon, waveguide, hom)")]
    UnknownPreset(String),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    /// Reuse a matching cached correlator, otherwise compute and store it.
    #[default]
    Reuse,
    /// Always recompute, then overwrite the cache.
    Refresh,
    /// Neither read nor write the cache.
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "yes")]
    pub deterministic: bool,
    #[serde(default)]
    pub cache: CachePolicy,
    pub atom: AtomConfig,
    pub pulse: PulseConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub hhg: Option<HhgConfig>,
    #[serde(default)]
    pub pairs: PairsConfig,
    #[serde(default, rename = "macro")]
    pub macroscopic: Option<MacroConfig>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    /// Rare-gas label whose ionization energy the model is tuned to.
    #[serde(default)]
    pub species: Option<String>,
    /// Overrides the species value.
    #[serde(default)]
    pub ionization_energy: Option<Energy>,
    /// Fixes the soft-core parameter instead of tuning it.
    #[serde(default)]
    pub softening: Option<Length>,
}

impl AtomConfig {
    /// Target ionization energy (hartree), if the block pins one.
    pub fn target_ip(&self) -> Result<Option<f64>, ConfigError> {
        if let Some(e) = self.ionization_energy {
            return Ok(Some(e.value()));
        }
        match &self.species {
            None => Ok(None),
            Some(s) => species_ip_ev(s)
                .map(|ev| Some(units::ev_to_au(ev)))
                .ok_or_else(|| invalid("atom.species", format!("unknown species {s:?}"))),
        }
    }
}

/// First ionization energies (eV).
pub fn species_ip_ev(name: &str) -> Option<f64> {
    match GasSpecies::from_name(name)? {
        GasSpecies::He => Some(24.587),
        GasSpecies::Ne => Some(21.56),
        GasSpecies::Ar => Some(15.76),
        GasSpecies::Kr => Some(14.0),
        GasSpecies::Xe => Some(12.13),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    #[default]
    Sin2,
    Trapezoidal,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub wavelength: Length,
    pub intensity: Intensity,
    pub duration: Span,
    #[serde(default)]
    pub envelope: Envelope,
    /// Ramp length of the trapezoidal envelope.
    #[serde(default)]
    pub ramp: Option<Span>,
    #[serde(default)]
    pub cep: Option<Angle>,
}

impl PulseConfig {
    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength.value() / units::metres_to_bohr(1e-9)
    }

    pub fn period(&self) -> f64 {
        units::omega_to_period(units::wavelength_nm_to_omega(self.wavelength_nm()))
    }

    pub fn envelope_kind(&self) -> Result<EnvelopeKind, ConfigError> {
        let t0 = self.period();
        Ok(match self.envelope {
            Envelope::Sin2 => EnvelopeKind::SinSquared,
            Envelope::Flat => EnvelopeKind::Flat,
            Envelope::Trapezoidal => {
                let ramp = self
                    .ramp
                    .ok_or_else(|| invalid("pulse.ramp", "required for a trapezoidal envelope"))?;
                EnvelopeKind::Trapezoidal {
                    ramp_cycles: ramp.periods(t0),
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl From<Window> for WindowKind {
    fn from(w: Window) -> Self {
        match w {
            Window::Hann => WindowKind::Hann,
            Window::Rectangular => WindowKind::Rectangular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub grid_half_width: Length,
    pub grid_points: usize,
    pub dt: Span,
    pub store_stride: usize,
    /// Every this many stored samples enter the two-time correlator.
    pub correlation_stride: usize,
    pub absorber: bool,
    pub absorber_fraction: f64,
    pub absorber_exponent: f64,
    pub window: Window,
    pub pad_factor: usize,
    /// Upper edge of the pair-spectrum frequency axis.
    pub max_frequency: Frequency,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            grid_half_width: Length(100.0),
            grid_points: 512,
            dt: Span::Au(0.14),
            store_stride: 5,
            correlation_stride: 1,
            absorber: true,
            absorber_fraction: 0.125,
            absorber_exponent: 0.125,
            window: Window::Hann,
            pad_factor: 1,
            max_frequency: Frequency::Harmonic(70.0),
        }
    }
}

/// Drive used for the single-atom harmonic spectrum; unset fields fall back
/// to the `[pulse]` block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HhgConfig {
    #[serde(default)]
    pub duration: Option<Span>,
    #[serde(default)]
    pub envelope: Option<Envelope>,
    #[serde(default)]
    pub ramp: Option<Span>,
    /// Only samples inside `[start, end]` enter the transform.
    #[serde(default)]
    pub gate: Option<[Span; 2]>,
    #[serde(default)]
    pub pad_factor: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsConfig {
    /// Gaussian window FWHM of the time-frequency analysis; skipped if unset.
    #[serde(default)]
    pub tf_window: Option<Span>,
    #[serde(default)]
    pub tf_step: Option<Span>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    Shared,
    #[default]
    PerPhoton,
}

impl From<Convention> for IndexConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Shared => IndexConvention::Shared,
            Convention::PerPhoton => IndexConvention::PerPhoton,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroConfig {
    pub gas: String,
    pub pressure: Pressure,
    /// Ionization fraction eta.
    pub ionization: f64,
    pub length: Length,
    pub radius: Length,
    pub temperature: Temperature,
    /// Overall constant multiplying the yield assembly.
    pub calibration: f64,
    #[serde(default = "default_pump_photons")]
    pub pump_photons: f64,
    pub theta_max: Angle,
    pub n_theta: usize,
    #[serde(default)]
    pub band: Option<[Frequency; 2]>,
    #[serde(default)]
    pub convention: Convention,
    /// Stripe whose degenerate angle hosts the per-harmonic comb.
    #[serde(default = "default_comb_order")]
    pub comb_order: u32,
    /// Harmonic range defining the comb plateau level.
    #[serde(default = "default_comb_plateau")]
    pub comb_plateau: [usize; 2],
    #[serde(default = "default_comb_decades")]
    pub comb_decades: f64,
    /// Pressure of the second point of the density-scaling check (default 2P).
    #[serde(default)]
    pub scaling_pressure: Option<Pressure>,
}

fn default_pump_photons() -> f64 {
    1e17
}

fn default_comb_order() -> u32 {
    20
}

fn default_comb_plateau() -> [usize; 2] {
    [5, 15]
}

fn default_comb_decades() -> f64 {
    1.0
}

impl MacroConfig {
    pub fn species(&self) -> Result<GasSpecies, ConfigError> {
        GasSpecies::from_name(&self.gas).ok_or_else(|| invalid("macro.gas", format!("unknown gas {:?}", self.gas)))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub jsa: Option<JsaConfig>,
    #[serde(default)]
    pub hom: Option<HomConfig>,
    #[serde(default)]
    pub schmidt: SchmidtConfig,
    #[serde(default)]
    pub herald: Option<HeraldConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsaConfig {
    pub band: [Frequency; 2],
    /// Half-aperture of the collection cone; no phase-matching mask if unset.
    #[serde(default)]
    pub aperture: Option<Angle>,
    /// Cone axis; defaults to the degenerate angle of `aperture_order`.
    #[serde(default)]
    pub angle: Option<Angle>,
    #[serde(default)]
    pub aperture_order: Option<u32>,
    #[serde(default = "default_aperture_samples")]
    pub aperture_samples: usize,
    #[serde(default)]
    pub orders: Option<Vec<i64>>,
}

fn default_aperture_samples() -> usize {
    41
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomConfig {
    pub band: [Frequency; 2],
    pub max_delay: Span,
    pub delay_step: Span,
    /// Drive intensities to compare; defaults to the pulse intensity.
    #[serde(default)]
    pub intensities: Vec<Intensity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchmidtConfig {
    pub max_dim: usize,
    pub modes: usize,
}

impl Default for SchmidtConfig {
    fn default() -> Self {
        Self { max_dim: 512, modes: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldConfig {
    pub center: Frequency,
    pub bandwidth: Frequency,
    /// Herald from an unmasked state over this band instead of the `jsa`
    /// stage output.
    #[serde(default)]
    pub band: Option<[Frequency; 2]>,
    #[serde(default = "default_pad")]
    pub pad: usize,
}

fn default_pad() -> usize {
    8
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a file, or a bundled preset when given `preset:<name>`.
    pub fn load(spec: &str) -> Result<Self, ConfigError> {
        if let Some(name) = spec.strip_prefix("preset:") {
            return Self::preset(name);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, spec)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        Self::parse(text, &format!("preset:{name}"))
    }

    pub fn omega0(&self) -> f64 {
        units::wavelength_nm_to_omega(self.pulse.wavelength_nm())
    }

    /// SHA-256 of the canonical JSON form, ignoring output location and
    /// cache policy.
    pub fn hash(&self) -> [u8; 32] {
        let mut c = self.clone();
        c.output = None;
        c.cache = CachePolicy::Reuse;
        let json = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&json).into()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.atom;
        if a.target_ip()?.is_none() && a.softening.is_none() {
            return Err(invalid("atom", "give `species`, `ionization_energy` or `softening`"));
        }
        if let Some(ip) = a.ionization_energy {
            positive("atom.ionization_energy", ip.value())?;
        }
        if let Some(s) = a.softening {
            positive("atom.softening", s.value())?;
        }

        let p = &self.pulse;
        positive("pulse.wavelength", p.wavelength.value())?;
        positive("pulse.intensity", p.intensity.value())?;
        if !p.duration.is_positive() {
            return Err(invalid("pulse.duration", "must be > 0"));
        }
        p.envelope_kind()?;
        let w0 = self.omega0();

        let n = &self.numerics;
        positive("numerics.grid_half_width", n.grid_half_width.value())?;
        if n.grid_points < 16 || !n.grid_points.is_power_of_two() {
            return Err(invalid("numerics.grid_points", "must be a power of two >= 16"));
        }
        if !n.dt.is_positive() {
            return Err(invalid("numerics.dt", "must be > 0"));
        }
        for (f, v) in [
            ("numerics.store_stride", n.store_stride),
            ("numerics.correlation_stride", n.correlation_stride),
            ("numerics.pad_factor", n.pad_factor),
        ] {
            if v == 0 {
                return Err(invalid(f, "must be >= 1"));
            }
        }
        if !(n.absorber_fraction > 0.0 && n.absorber_fraction < 0.5) {
            return Err(invalid("numerics.absorber_fraction", "must lie in (0, 0.5)"));
        }
        positive("numerics.absorber_exponent", n.absorber_exponent)?;
        if !n.max_frequency.is_positive() {
            return Err(invalid("numerics.max_frequency", "must be > 0"));
        }

        if let Some(h) = &self.hhg {
            if let Some(d) = h.duration {
                if !d.is_positive() {
                    return Err(invalid("hhg.duration", "must be > 0"));
                }
            }
            if let Some([lo, hi]) = h.gate {
                let t0 = p.period();
                if !(lo.au(t0) >= 0.0 && hi.au(t0) > lo.au(t0)) {
                    return Err(invalid("hhg.gate", "need 0 <= start < end"));
                }
            }
            if h.pad_factor == Some(0) {
                return Err(invalid("hhg.pad_factor", "must be >= 1"));
            }
        }

        if let Some(m) = &self.macroscopic {
            m.species()?;
            if !(m.pressure.value() > 0.0) {
                return Err(invalid("macro.pressure", "must be > 0"));
            }
            if !(0.0..=1.0).contains(&m.ionization) {
                return Err(invalid("macro.ionization", "must lie in [0, 1]"));
            }
            positive("macro.length", m.length.value())?;
            positive("macro.radius", m.radius.value())?;
            positive("macro.temperature", m.temperature.value())?;
            positive("macro.calibration", m.calibration)?;
            positive("macro.pump_photons", m.pump_photons)?;
            positive("macro.theta_max", m.theta_max.value())?;
            if m.n_theta < 2 {
                return Err(invalid("macro.n_theta", "must be >= 2"));
            }
            check_band("macro.band", m.band, w0)?;
            if m.comb_order == 0 || m.comb_order % 2 == 1 {
                return Err(invalid("macro.comb_order", "must be a positive even order"));
            }
            if m.comb_plateau[0] >= m.comb_plateau[1] {
                return Err(invalid("macro.comb_plateau", "need start < end"));
            }
            positive("macro.comb_decades", m.comb_decades)?;
            if let Some(sp) = m.scaling_pressure {
                positive("macro.scaling_pressure", sp.value())?;
            }
        }

        let an = &self.analysis;
        if let Some(j) = &an.jsa {
            check_band("analysis.jsa.band", Some(j.band), w0)?;
            if let Some(a) = j.aperture {
                positive("analysis.jsa.aperture", a.value())?;
                if self.macroscopic.is_none() {
                    return Err(invalid(
                        "analysis.jsa.aperture",
                        "a collection aperture needs a [macro] block",
                    ));
                }
            }
            if j.aperture_samples == 0 {
                return Err(invalid("analysis.jsa.aperture_samples", "must be >= 1"));
            }
        }
        if let Some(h) = &an.hom {
            check_band("analysis.hom.band", Some(h.band), w0)?;
            if !(h.max_delay.is_positive() && h.delay_step.is_positive()) {
                return Err(invalid("analysis.hom", "delay range and step must be > 0"));
            }
            for i in &h.intensities {
                positive("analysis.hom.intensities", i.value())?;
            }
        }
        if an.schmidt.max_dim < 2 || an.schmidt.modes == 0 {
            return Err(invalid("analysis.schmidt", "need max_dim >= 2 and modes >= 1"));
        }
        if let Some(h) = &an.herald {
            check_band("analysis.herald.band", h.band, w0)?;
            if !(h.center.is_positive() && h.bandwidth.is_positive()) {
                return Err(invalid("analysis.herald", "center and bandwidth must be > 0"));
            }
            if h.pad == 0 {
                return Err(invalid("analysis.herald.pad", "must be >= 1"));
            }
        }
        Ok(())
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be > 0, got {v}")))
    }
}

fn check_band(field: &str, band: Option<[Frequency; 2]>, w0: f64) -> Result<(), ConfigError> {
    let Some([lo, hi]) = band else { return Ok(()) };
    if !(lo.au(w0) >= 0.0 && hi.au(w0) > lo.au(w0)) {
        return Err(invalid(field, "need 0 <= low < high"));
    }
    Ok(())
}
