//! Run manifest: every artifact with its checksum, plus per-stage summaries.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pipeline::Stage;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub stage: Stage,
    pub sha256: String,
    pub bytes: u64,
    /// Reused from an earlier run rather than written now.
    pub cached: bool,
}

/// Drive and atom values figure scripts need for guide lines.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub omega0_au: f64,
    pub period_au: f64,
    pub wavelength_nm: f64,
    pub intensity_w_cm2: f64,
    pub ionization_energy_ev: Option<f64>,
    pub ponderomotive_energy_ev: f64,
    pub predicted_cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundReport {
    pub softening_au: f64,
    pub ground_energy_au: f64,
    pub ionization_energy_ev: f64,
    pub grid_points: usize,
    pub grid_half_width_au: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HhgReport {
    pub cutoff: f64,
    pub predicted_cutoff: f64,
    pub cutoff_drop: f64,
    pub plateau_level: f64,
    /// Smallest ratio of an odd harmonic peak to the larger even neighbour.
    pub min_odd_even_contrast: f64,
    pub contrast_orders: (u32, u32),
    pub final_norm_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairsReport {
    pub cutoff: f64,
    pub predicted_cutoff: f64,
    /// Fraction of intensity within a quarter photon of even sum orders.
    pub even_stripe_fraction: f64,
    pub odd_stripe_fraction: f64,
    pub primary: f64,
    pub between: f64,
    pub beyond_box: f64,
    pub between_mean: f64,
    pub beyond_box_mean: f64,
    pub plateau_stripe_mean: f64,
    pub correlation_cached: bool,
    /// Separation (periods) maximizing time-correlated content above the
    /// primary cutoff, when a time-frequency window is configured.
    pub tf_peak_separation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroReport {
    pub total_counts: f64,
    pub calibration: f64,
    pub atom_number: f64,
    pub comb_order: u32,
    pub comb_angle_mrad: f64,
    pub comb_edge: Option<usize>,
    /// Yield ratio after changing the pressure at fixed ionization fraction.
    pub scaling_ratio: f64,
    pub scaling_pressure_ratio: f64,
    pub max_hhg_suppression: f64,
    /// `(q, theta_mrad)` of each degenerate pair with a solution.
    pub degenerate_angles_mrad: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsaReport {
    pub points: usize,
    pub asymmetry: f64,
    pub cone_angle_mrad: Option<f64>,
    pub stripe_weights: Vec<(i64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomEntry {
    pub intensity_w_cm2: f64,
    pub probability_at_zero: f64,
    pub dip_fwhm_as: Option<f64>,
    /// Strongest local extremum within 10% of half a period: `(delay / T0, P)`.
    pub half_period_extremum: Option<(f64, f64)>,
    pub correlation_cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomReport {
    pub period_as: f64,
    pub curves: Vec<HomEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripeSchmidt {
    pub q: i64,
    pub weight: f64,
    pub schmidt_number: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSummary {
    pub schmidt_number: f64,
    pub entropy: f64,
    pub leading_lambdas: Vec<f64>,
    pub stripes: Vec<StripeSchmidt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeraldReport {
    pub orders: Vec<i64>,
    pub train_period_t0: Option<f64>,
    pub main_peak_fwhm_as: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Reports {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground: Option<GroundReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hhg: Option<HhgReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PairsReport>,
    #[serde(skip_serializing_if = "Option::is_none", rename = "macro")]
    pub macroscopic: Option<MacroReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jsa: Option<JsaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hom: Option<HomReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schmidt: Option<SchmidtSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub herald: Option<HeraldReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub format_version: u32,
    pub config_hash: String,
    pub deterministic: bool,
    pub threads: usize,
    pub stages: Vec<Stage>,
    pub parameters: Parameters,
    pub files: Vec<FileEntry>,
    /// Cache entries that failed validation and were recomputed.
    pub cache_events: Vec<String>,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(Stage, f64)>,
    pub reports: Reports,
}

impl Manifest {
    pub fn file(&self, path: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == path)
    }

    pub fn read(dir: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}
