//! Stage orchestration, correlator caching and artifact bookkeeping.

use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sfpg_core::io::{
    self, file_sha256, read_correlation, sidecar_path, write_correlation, write_dipole_csv, write_hhg_csv, write_jsa,
    write_pair_amplitude, write_pair_csv, write_yield_csv, CsvWriter,
};
use sfpg_core::macroscopic::{
    angular_yield, comb_edge, emission_angle, hhg_suppression_ratio, DispersionModel, IndexConvention,
    InteractionGeometry, YieldOptions,
};
use sfpg_core::quantum_state::{
    build_jsa, default_delays, heralded_pulse, hom_curve, schmidt_decompose, Collection, JointSpectralAmplitude,
    PhaseMatchingMask, SchmidtOptions,
};
use sfpg_core::spectra::{
    cutoff_report, hhg_spectrum, pair_amplitude, pair_spectrum_from_amplitude, predicted_cutoff, time_frequency_map,
    PairAmplitude, PairOptions, PairSpectrum, SpectrumOptions,
};
use sfpg_core::tdse::{
    find_ground_state, propagate, two_time_correlation, Absorber, AtomModel, CorrelationMatrix, GroundStateOptions,
    LaserPulse, PropagationSettings, SpatialGrid, TdseError,
};
use sfpg_core::units;
use sha2::{Digest, Sha256};

use crate::config::{CachePolicy, ConfigError, PulseConfig, RunConfig};
use crate::error::{storage, storage_io, CliError, NumericalError};
use crate::manifest::*;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const LOCK_NAME: &str = "sfpg.lock";
pub const CACHE_DIR: &str = "cache";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ground,
    Hhg,
    Pairs,
    Macro,
    Jsa,
    Hom,
    Schmidt,
    Herald,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ground,
        Stage::Hhg,
        Stage::Pairs,
        Stage::Macro,
        Stage::Jsa,
        Stage::Hom,
        Stage::Schmidt,
        Stage::Herald,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ground => "ground",
            Stage::Hhg => "hhg",
            Stage::Pairs => "pairs",
            Stage::Macro => "macro",
            Stage::Jsa => "jsa",
            Stage::Hom => "hom",
            Stage::Schmidt => "schmidt",
            Stage::Herald => "herald",
        }
    }

    pub fn dependencies(self) -> &'static [Stage] {
        match self {
            Stage::Ground => &[],
            Stage::Hhg | Stage::Pairs | Stage::Hom => &[Stage::Ground],
            Stage::Macro | Stage::Jsa => &[Stage::Pairs],
            Stage::Schmidt | Stage::Herald => &[Stage::Jsa],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Requested stages plus everything they depend on, in execution order.
pub fn expand(stages: &[Stage]) -> Vec<Stage> {
    let mut out: Vec<Stage> = Vec::new();
    let mut todo: Vec<Stage> = stages.to_vec();
    while let Some(s) = todo.pop() {
        if !out.contains(&s) {
            out.push(s);
            todo.extend_from_slice(s.dependencies());
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// `false` disables the correlator cache regardless of the config.
    pub use_cache: bool,
}

/// Exclusive claim on an output directory, released on drop.
struct DirLock(PathBuf);

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked { path }),
            Err(e) => Err(storage_io(path)(e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// Run `stages` (and their dependencies) and write `manifest.json` into the
/// output directory.
pub fn run_pipeline(config: &RunConfig, stages: &[Stage], opts: &RunOptions) -> Result<Manifest, CliError> {
    let plan = expand(stages);
    check_blocks(config, &plan)?;
    fs::create_dir_all(&opts.out_dir).map_err(storage_io(&opts.out_dir))?;
    let _lock = DirLock::acquire(&opts.out_dir)?;

    let policy = if opts.use_cache { config.cache } else { CachePolicy::Off };
    let mut run = Run::new(config, opts.out_dir.clone(), policy, &plan)?;
    for &stage in &plan {
        let t = Instant::now();
        info!("stage {stage}: start");
        run.execute(stage)?;
        let secs = t.elapsed().as_secs_f64();
        info!("stage {stage}: done in {secs:.1} s");
        run.manifest.timings.push((stage, secs));
    }
    carry_forward(&mut run.manifest, &opts.out_dir);
    let path = opts.out_dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(&run.manifest).expect("manifest serializes");
    let tmp = path.with_extension("json.partial");
    fs::write(&tmp, text).map_err(storage_io(&tmp))?;
    fs::rename(&tmp, &path).map_err(storage_io(&path))?;
    Ok(run.manifest)
}

/// Keep entries and reports of an earlier run with the same config whose
/// files are still present and unchanged, so the manifest describes the
/// whole directory.
fn carry_forward(manifest: &mut Manifest, dir: &Path) {
    let Ok(old) = Manifest::read(dir) else { return };
    if old.config_hash != manifest.config_hash {
        return;
    }
    for f in old.files {
        if manifest.file(&f.path).is_some() {
            continue;
        }
        let path = dir.join(&f.path);
        if file_sha256(&path).is_ok_and(|h| h == f.sha256) {
            manifest.files.push(f);
        }
    }
    let (new, old) = (&mut manifest.reports, old.reports);
    new.ground = new.ground.take().or(old.ground);
    new.hhg = new.hhg.take().or(old.hhg);
    new.pairs = new.pairs.take().or(old.pairs);
    new.macroscopic = new.macroscopic.take().or(old.macroscopic);
    new.jsa = new.jsa.take().or(old.jsa);
    new.hom = new.hom.take().or(old.hom);
    new.schmidt = new.schmidt.take().or(old.schmidt);
    new.herald = new.herald.take().or(old.herald);
}

fn check_blocks(cfg: &RunConfig, plan: &[Stage]) -> Result<(), CliError> {
    let missing = |stage: Stage, what: &str| CliError::StageDependencyMissing {
        stage,
        missing: what.to_string(),
    };
    for &s in plan {
        match s {
            Stage::Macro if cfg.macroscopic.is_none() => return Err(missing(s, "a [macro] block")),
            Stage::Jsa if cfg.analysis.jsa.is_none() => return Err(missing(s, "an [analysis.jsa] block")),
            Stage::Hom if cfg.analysis.hom.is_none() => return Err(missing(s, "an [analysis.hom] block")),
            Stage::Herald if cfg.analysis.herald.is_none() => return Err(missing(s, "an [analysis.herald] block")),
            _ => {}
        }
    }
    Ok(())
}

/// Inputs that determine a correlator; hashed to key the cache.
#[derive(Serialize)]
struct CorrelationKey {
    code_version: &'static str,
    format_version: u32,
    x_min: f64,
    x_max: f64,
    points: usize,
    softening: f64,
    ground_energy: f64,
    wavelength_nm: f64,
    intensity_w_cm2: f64,
    cycles: f64,
    envelope: String,
    cep: f64,
    dt: f64,
    absorber: Option<(f64, f64)>,
    store_stride: usize,
    correlation_stride: usize,
}

struct Amplitude {
    intensity: f64,
    amp: PairAmplitude,
    cached: bool,
}

struct Run<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    policy: CachePolicy,
    config_hash: [u8; 32],
    pulse: LaserPulse,
    atom: Option<AtomModel>,
    amplitudes: Vec<Amplitude>,
    pair_cutoff: Option<f64>,
    jsa: Option<JointSpectralAmplitude>,
    manifest: Manifest,
}

fn build_pulse(p: &PulseConfig, intensity: f64) -> Result<LaserPulse, CliError> {
    let t0 = p.period();
    LaserPulse::new(
        p.wavelength_nm(),
        intensity,
        p.duration.periods(t0),
        p.envelope_kind()?,
        p.cep.map_or(0.0, |a| a.value()),
    )
    .map_err(|e| {
        CliError::Config(ConfigError::Invalid {
            field: "pulse".into(),
            reason: e.to_string(),
        })
    })
}

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig, out: PathBuf, policy: CachePolicy, plan: &[Stage]) -> Result<Self, CliError> {
        let pulse = build_pulse(&cfg.pulse, cfg.pulse.intensity.value())?;
        let config_hash = cfg.hash();
        let manifest = Manifest {
            code_version: CODE_VERSION.to_string(),
            format_version: io::FORMAT_VERSION,
            config_hash: hex::encode(config_hash),
            deterministic: cfg.deterministic,
            threads: rayon::current_num_threads(),
            stages: plan.to_vec(),
            parameters: Parameters {
                omega0_au: pulse.omega0(),
                period_au: pulse.period(),
                wavelength_nm: pulse.wavelength_nm(),
                intensity_w_cm2: pulse.peak_intensity_w_cm2(),
                ionization_energy_ev: None,
                ponderomotive_energy_ev: pulse.up_ev(),
                predicted_cutoff: None,
            },
            files: Vec::new(),
            cache_events: Vec::new(),
            timings: Vec::new(),
            reports: Reports::default(),
        };
        Ok(Self {
            cfg,
            out,
            policy,
            config_hash,
            pulse,
            atom: None,
            amplitudes: Vec::new(),
            pair_cutoff: None,
            jsa: None,
            manifest,
        })
    }

    fn execute(&mut self, stage: Stage) -> Result<(), CliError> {
        match stage {
            Stage::Ground => self.ground(),
            Stage::Hhg => self.hhg(),
            Stage::Pairs => self.pairs(),
            Stage::Macro => self.macroscopic(),
            Stage::Jsa => self.jsa(),
            Stage::Hom => self.hom(),
            Stage::Schmidt => self.schmidt(),
            Stage::Herald => self.herald(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Add (or refresh) a manifest entry for a file under the output dir.
    fn record(&mut self, stage: Stage, path: &Path, cached: bool) -> Result<(), CliError> {
        let rel = path
            .strip_prefix(&self.out)
            .unwrap_or(path)
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        let sha256 = file_sha256(path).map_err(storage(path))?;
        let bytes = fs::metadata(path).map_err(storage_io(path))?.len();
        let entry = FileEntry {
            path: rel,
            stage,
            sha256,
            bytes,
            cached,
        };
        match self.manifest.files.iter_mut().find(|f| f.path == entry.path) {
            Some(f) => *f = entry,
            None => self.manifest.files.push(entry),
        }
        Ok(())
    }

    fn record_binary(&mut self, stage: Stage, path: &Path, cached: bool) -> Result<(), CliError> {
        self.record(stage, path, cached)?;
        self.record(stage, &sidecar_path(path), cached)
    }

    fn atom(&self, stage: Stage) -> Result<&AtomModel, CliError> {
        self.atom.as_ref().ok_or_else(|| CliError::StageDependencyMissing {
            stage,
            missing: "the ground stage".into(),
        })
    }

    fn settings(&self) -> PropagationSettings {
        let n = &self.cfg.numerics;
        PropagationSettings {
            dt: n.dt.au(self.pulse.period()),
            absorber: n.absorber.then_some(Absorber {
                fraction: n.absorber_fraction,
                exponent: n.absorber_exponent,
            }),
            store_stride: n.store_stride,
        }
    }

    fn pair_options(&self) -> PairOptions {
        let n = &self.cfg.numerics;
        PairOptions {
            window: n.window.into(),
            pad_factor: n.pad_factor,
            max_omega: Some(n.max_frequency.au(self.pulse.omega0())),
        }
    }

    fn ground(&mut self) -> Result<(), CliError> {
        let stage = Stage::Ground;
        let num = CliError::numerical(stage);
        let n = &self.cfg.numerics;
        let grid = SpatialGrid::symmetric(n.grid_half_width.value(), n.grid_points).map_err(|e| num(e.into()))?;
        let atom = match (self.cfg.atom.softening, self.cfg.atom.target_ip()?) {
            (Some(a), _) => AtomModel::relaxed(grid, a.value(), &GroundStateOptions::default()),
            (None, Some(ip)) => find_ground_state(grid, ip),
            (None, None) => unreachable!("validated config pins the atom"),
        };
        let atom = atom.map_err(|e| CliError::numerical(stage)(e.into()))?;
        info!(
            "softening {:.6} a.u., I_p {:.4} eV",
            atom.softening(),
            atom.ionization_energy_ev()
        );

        let path = self.path("ground_state.csv");
        let mut w = CsvWriter::create(&path, &["x_au", "psi_re", "psi_im", "potential_au"]).map_err(storage(&path))?;
        for (j, psi) in atom.ground_state().iter().enumerate() {
            w.row(&[grid.x(j), psi.re, psi.im, atom.potential()[j]])
                .map_err(storage(&path))?;
        }
        w.finish().map_err(storage(&path))?;
        self.record(stage, &path, false)?;

        let p = &mut self.manifest.parameters;
        p.ionization_energy_ev = Some(atom.ionization_energy_ev());
        p.predicted_cutoff = Some(predicted_cutoff(
            atom.ionization_energy(),
            self.pulse.up(),
            self.pulse.omega0(),
        ));
        self.manifest.reports.ground = Some(GroundReport {
            softening_au: atom.softening(),
            ground_energy_au: atom.ground_energy(),
            ionization_energy_ev: atom.ionization_energy_ev(),
            grid_points: grid.len(),
            grid_half_width_au: grid.x_max(),
        });
        self.atom = Some(atom);
        Ok(())
    }

    fn hhg(&mut self) -> Result<(), CliError> {
        let stage = Stage::Hhg;
        let num = CliError::numerical(stage);
        let mut pc = self.cfg.pulse.clone();
        let h = self.cfg.hhg.clone().unwrap_or_default();
        if let Some(d) = h.duration {
            pc.duration = d;
        }
        if let Some(e) = h.envelope {
            pc.envelope = e;
        }
        if h.ramp.is_some() {
            pc.ramp = h.ramp;
        }
        let pulse = build_pulse(&pc, pc.intensity.value())?;
        let t0 = pulse.period();
        let w0 = pulse.omega0();
        let atom = self.atom(stage)?;

        let rec = propagate(atom, &pulse, &self.settings()).map_err(|e| num(e.into()))?;
        let opts = SpectrumOptions {
            window: self.cfg.numerics.window.into(),
            pad_factor: h.pad_factor.unwrap_or(2),
            gate: h.gate.map(|[a, b]| (a.au(t0), b.au(t0))),
        };
        let spec = hhg_spectrum(&rec, w0, &opts).map_err(|e| CliError::numerical(stage)(e.into()))?;
        let rep = cutoff_report(&spec, atom, &pulse).map_err(|e| CliError::numerical(stage)(e.into()))?;

        // Odd lines against the even positions on either side, across the
        // plateau up to two orders below the cutoff.
        let first = (atom.ionization_energy() / w0).ceil() as u32 | 1;
        let last = (rep.q_c.floor() as u32).saturating_sub(2);
        let mut contrast = f64::INFINITY;
        for q in (first..=last).step_by(2) {
            let odd = spec.peak_near(q as f64, 0.1);
            let even = spec
                .peak_near(q as f64 - 1.0, 0.1)
                .max(spec.peak_near(q as f64 + 1.0, 0.1));
            contrast = contrast.min(odd / even);
        }
        let loss = rec.norm_loss.last().copied().unwrap_or(0.0);

        let path = self.path("dipole.csv");
        write_dipole_csv(&path, &rec).map_err(storage(&path))?;
        self.record(stage, &path, false)?;
        let path = self.path("hhg_spectrum.csv");
        write_hhg_csv(&path, &spec).map_err(storage(&path))?;
        self.record(stage, &path, false)?;

        info!("harmonic cutoff {:.2} (predicted {:.2})", rep.q_c, rep.predicted_q_c);
        self.manifest.reports.hhg = Some(HhgReport {
            cutoff: rep.q_c,
            predicted_cutoff: rep.predicted_q_c,
            cutoff_drop: rep.q_drop,
            plateau_level: rep.plateau_level,
            min_odd_even_contrast: contrast,
            contrast_orders: (first, last),
            final_norm_loss: loss,
        });
        Ok(())
    }

    fn correlation_key(&self, pulse: &LaserPulse) -> Result<[u8; 32], CliError> {
        let atom = self.atom(Stage::Pairs)?;
        let s = self.settings();
        let key = CorrelationKey {
            code_version: CODE_VERSION,
            format_version: io::FORMAT_VERSION,
            x_min: atom.grid().x_min(),
            x_max: atom.grid().x_max(),
            points: atom.grid().len(),
            softening: atom.softening(),
            ground_energy: atom.ground_energy(),
            wavelength_nm: pulse.wavelength_nm(),
            intensity_w_cm2: pulse.peak_intensity_w_cm2(),
            cycles: pulse.n_cycles(),
            envelope: format!("{:?}", pulse.envelope()),
            cep: pulse.cep(),
            dt: s.dt,
            absorber: s.absorber.map(|a| (a.fraction, a.exponent)),
            store_stride: s.store_stride,
            correlation_stride: self.cfg.numerics.correlation_stride,
        };
        let json = serde_json::to_vec(&key).expect("key serializes");
        Ok(Sha256::digest(&json).into())
    }

    /// Connected correlator at the given drive intensity, from the cache when
    /// a valid entry exists.
    fn correlation(&mut self, stage: Stage, intensity: f64) -> Result<(CorrelationMatrix, bool), CliError> {
        let pulse = build_pulse(&self.cfg.pulse, intensity)?;
        let hash = self.correlation_key(&pulse)?;
        let dir = self.out.join(CACHE_DIR);
        let path = dir.join(format!("correlation_{}.bin", &hex::encode(hash)[..16]));

        if self.policy == CachePolicy::Reuse && path.exists() {
            match read_correlation(&path, Some(&hash)) {
                Ok(c) => {
                    info!("correlator at {intensity:.3e} W/cm^2: cache hit");
                    self.record_binary(stage, &path, true)?;
                    return Ok((c, true));
                }
                Err(e) => {
                    let event = TdseError::CacheMismatch(format!("{}: {e}", path.display())).to_string();
                    warn!("{event}; recomputing");
                    self.manifest.cache_events.push(event);
                }
            }
        }

        info!("correlator at {intensity:.3e} W/cm^2: computing");
        let atom = self.atom(stage)?;
        let corr = two_time_correlation(atom, &pulse, &self.settings(), self.cfg.numerics.correlation_stride)
            .map_err(|e| CliError::numerical(stage)(e.into()))?;
        if self.policy != CachePolicy::Off {
            fs::create_dir_all(&dir).map_err(storage_io(&dir))?;
            write_correlation(&path, &corr, hash).map_err(storage(&path))?;
            self.record_binary(stage, &path, false)?;
        }
        Ok((corr, false))
    }

    /// Index into `amplitudes` for the given intensity, computing on demand.
    fn amplitude(&mut self, stage: Stage, intensity: f64) -> Result<usize, CliError> {
        if let Some(i) = self.amplitudes.iter().position(|a| a.intensity == intensity) {
            return Ok(i);
        }
        let (corr, cached) = self.correlation(stage, intensity)?;
        let amp = pair_amplitude(&corr, &self.pair_options()).map_err(|e| CliError::numerical(stage)(e.into()))?;
        self.amplitudes.push(Amplitude { intensity, amp, cached });
        Ok(self.amplitudes.len() - 1)
    }

    fn base_spectrum(&mut self, stage: Stage) -> Result<PairSpectrum, CliError> {
        let k = self.amplitude(stage, self.pulse.peak_intensity_w_cm2())?;
        Ok(pair_spectrum_from_amplitude(&self.amplitudes[k].amp))
    }

    fn pairs(&mut self) -> Result<(), CliError> {
        let stage = Stage::Pairs;
        let intensity = self.pulse.peak_intensity_w_cm2();
        let w0 = self.pulse.omega0();
        let t0 = self.pulse.period();

        // The time-frequency map needs the correlator itself, so it is done
        // before the amplitude replaces it.
        let mut tf = None;
        let k = match self.amplitudes.iter().position(|a| a.intensity == intensity) {
            Some(k) => k,
            None => {
                let (corr, cached) = self.correlation(stage, intensity)?;
                let amp =
                    pair_amplitude(&corr, &self.pair_options()).map_err(|e| CliError::numerical(stage)(e.into()))?;
                if let Some(width) = self.cfg.pairs.tf_window {
                    let step = self.cfg.pairs.tf_step.map_or(0.0625 * t0, |s| s.au(t0));
                    let stride = ((step / corr.spacing()).round() as usize).max(1);
                    let map = time_frequency_map(&corr, width.au(t0), stride)
                        .map_err(|e| CliError::numerical(stage)(e.into()))?;
                    tf = Some(map);
                }
                self.amplitudes.push(Amplitude { intensity, amp, cached });
                self.amplitudes.len() - 1
            }
        };
        let amp = &self.amplitudes[k];
        let cached = amp.cached;
        let ps = pair_spectrum_from_amplitude(&amp.amp);
        let atom = self.atom(stage)?;
        let rep = cutoff_report(&ps, atom, &self.pulse).map_err(|e| CliError::numerical(stage)(e.into()))?;
        let stats = rep.pair.expect("pair input yields pair statistics");
        let even = ps.stripe_fraction(w0, 0.25 * w0, |q| q % 2 == 0);
        let odd = ps.stripe_fraction(w0, 0.25 * w0, |q| q % 2 != 0);

        let path = self.path("pair_amplitude.bin");
        write_pair_amplitude(&path, &self.amplitudes[k].amp, self.config_hash).map_err(storage(&path))?;
        self.record_binary(stage, &path, false)?;
        let path = self.path("pair_spectrum.csv");
        write_pair_csv(&path, &ps).map_err(storage(&path))?;
        self.record(stage, &path, false)?;

        let mut tf_peak = None;
        if let Some(map) = tf {
            let qc = rep.q_c * w0;
            let primary = map.separation_profile(0.5 * w0, qc);
            let beyond = map.separation_profile(qc + 6.0 * w0, 2.0 * qc);
            let path = self.path("tf_separation.csv");
            let mut w =
                CsvWriter::create(&path, &["separation_T0", "primary", "beyond_primary"]).map_err(storage(&path))?;
            for ((d, p), (_, b)) in primary.iter().zip(&beyond) {
                w.row(&[d / t0, *p, *b]).map_err(storage(&path))?;
            }
            w.finish().map_err(storage(&path))?;
            self.record(stage, &path, false)?;
            tf_peak = beyond
                .iter()
                .filter(|(d, _)| *d > 0.0 && *d <= t0)
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(d, _)| d / t0);
        }

        info!("pair cutoff {:.2}, even-stripe fraction {even:.4}", rep.q_c);
        self.pair_cutoff = Some(rep.q_c);
        self.manifest.reports.pairs = Some(PairsReport {
            cutoff: rep.q_c,
            predicted_cutoff: rep.predicted_q_c,
            even_stripe_fraction: even,
            odd_stripe_fraction: odd,
            primary: stats.primary,
            between: stats.between,
            beyond_box: stats.beyond_box,
            between_mean: stats.between_mean,
            beyond_box_mean: stats.beyond_box_mean,
            plateau_stripe_mean: stats.plateau_stripe_mean,
            correlation_cached: cached,
            tf_peak_separation: tf_peak,
        });
        Ok(())
    }

    fn medium(&self) -> Result<(DispersionModel, InteractionGeometry), CliError> {
        let m = self.cfg.macroscopic.as_ref().ok_or(CliError::StageDependencyMissing {
            stage: Stage::Macro,
            missing: "a [macro] block".into(),
        })?;
        let model = DispersionModel::new(
            m.species()?,
            m.pressure.value(),
            m.ionization,
            m.radius.value(),
            m.temperature.value(),
        )
        .map_err(|e| {
            CliError::Config(ConfigError::Invalid {
                field: "macro".into(),
                reason: e.to_string(),
            })
        })?;
        Ok((model, geometry(&model, m.length.value(), m.pump_photons)))
    }

    fn macroscopic(&mut self) -> Result<(), CliError> {
        let stage = Stage::Macro;
        let num = CliError::numerical(stage);
        let m = self.cfg.macroscopic.clone().expect("checked before the run");
        let w0 = self.pulse.omega0();
        let (model, geom) = self.medium()?;
        let ps = self.base_spectrum(stage)?;

        let opts = YieldOptions {
            omega0: w0,
            thetas: YieldOptions::uniform_thetas(m.theta_max.value(), m.n_theta),
            band: m.band.map(|[lo, hi]| (lo.au(w0), hi.au(w0))),
            calibration: m.calibration,
            convention: m.convention.into(),
            orders: None,
        };
        let map = angular_yield(&ps, &geom, &model, &opts).map_err(|e| num(e.into()))?;

        let q = m.comb_order;
        let comb_theta =
            emission_angle(q, 0.5 * q as f64 * w0, w0, &model).map_err(|e| CliError::numerical(stage)(e.into()))?;
        let j0 = nearest(&map.thetas, comb_theta);
        let comb = map.comb_at(j0);
        let edge = comb_edge(&comb, (m.comb_plateau[0], m.comb_plateau[1]), m.comb_decades);

        // Density scaling: the same stripe at its own matched angle, both
        // photons seeing n(omega), at P and at the scaling pressure.
        let p2 = m.scaling_pressure.map_or(2.0 * m.pressure.value(), |p| p.value());
        let i = map.omegas.iter().position(|w| *w >= 0.5 * q as f64 * w0).unwrap_or(0);
        let w = map.omegas[i];
        let mut yields = Vec::new();
        for model in [model, model.with_pressure(p2)] {
            let geom = geometry(&model, m.length.value(), m.pump_photons);
            let th = emission_angle(q, w, w0, &model).map_err(|e| CliError::numerical(stage)(e.into()))?;
            let o = YieldOptions {
                thetas: vec![th],
                band: Some((w * 0.999, w * 1.001)),
                convention: IndexConvention::Shared,
                orders: Some(vec![q]),
                ..opts.clone()
            };
            let single = angular_yield(&ps, &geom, &model, &o).map_err(|e| CliError::numerical(stage)(e.into()))?;
            yields.push(single.dn.first().copied().unwrap_or(0.0));
        }

        let predicted = self.manifest.parameters.predicted_cutoff.unwrap_or(0.0);
        let first = (self.atom(stage)?.ionization_energy() / w0).ceil() as u32 | 1;
        let max_supp = (first..=predicted.floor() as u32)
            .step_by(2)
            .map(|h| hhg_suppression_ratio(&model, &geom, h as f64 * w0, w0))
            .fold(0.0, f64::max);
        let angles: Vec<(u32, f64)> = (1..=(2.0 * predicted).ceil() as u32 / 2)
            .map(|k| 2 * k)
            .filter_map(|q| {
                emission_angle(q, 0.5 * q as f64 * w0, w0, &model)
                    .ok()
                    .map(|t| (q, t * 1e3))
            })
            .collect();

        let path = self.path("yield_map.csv");
        write_yield_csv(&path, &map).map_err(storage(&path))?;
        self.record(stage, &path, false)?;
        let path = self.path("comb.csv");
        let mut wr = CsvWriter::create(&path, &["harmonic", "counts"]).map_err(storage(&path))?;
        for (h, v) in &comb {
            wr.row(&[*h as f64, *v]).map_err(storage(&path))?;
        }
        wr.finish().map_err(storage(&path))?;
        self.record(stage, &path, false)?;
        let path = self.path("degenerate_angles.csv");
        let mut wr = CsvWriter::create(&path, &["q", "theta_mrad"]).map_err(storage(&path))?;
        for (q, t) in &angles {
            wr.row(&[*q as f64, *t]).map_err(storage(&path))?;
        }
        wr.finish().map_err(storage(&path))?;
        self.record(stage, &path, false)?;

        let total = map.total_counts();
        info!("pairs per shot {total:.3e}, comb edge {edge:?}");
        self.manifest.reports.macroscopic = Some(MacroReport {
            total_counts: total,
            calibration: m.calibration,
            atom_number: geom.atom_number(),
            comb_order: q,
            comb_angle_mrad: map.thetas[j0] * 1e3,
            comb_edge: edge,
            scaling_ratio: yields[1] / yields[0],
            scaling_pressure_ratio: p2 / m.pressure.value(),
            max_hhg_suppression: max_supp,
            degenerate_angles_mrad: angles,
        });
        Ok(())
    }

    fn jsa(&mut self) -> Result<(), CliError> {
        let stage = Stage::Jsa;
        let j = self.cfg.analysis.jsa.clone().expect("checked before the run");
        let w0 = self.pulse.omega0();
        let band = (j.band[0].au(w0), j.band[1].au(w0));
        let mut cone = None;
        let phase_matching = match j.aperture {
            None => None,
            Some(aperture) => {
                let (model, geom) = self.medium()?;
                let center = match j.angle {
                    Some(a) => a.value(),
                    None => {
                        let q = j
                            .aperture_order
                            .unwrap_or(2 * ((band.0 + band.1) / (2.0 * w0)).round() as u32);
                        emission_angle(q, 0.5 * q as f64 * w0, w0, &model)
                            .map_err(|e| CliError::numerical(stage)(e.into()))?
                    }
                };
                cone = Some(center * 1e3);
                Some(PhaseMatchingMask {
                    model,
                    geom,
                    theta_center: center,
                    half_aperture: aperture.value(),
                    n_theta: j.aperture_samples,
                    convention: IndexConvention::PerPhoton,
                })
            }
        };
        let collection = Collection {
            band,
            omega0: w0,
            phase_matching,
            orders: j.orders.clone(),
        };
        let k = self.amplitude(stage, self.pulse.peak_intensity_w_cm2())?;
        let jsa = build_jsa(&self.amplitudes[k].amp, &collection).map_err(|e| CliError::numerical(stage)(e.into()))?;

        let path = self.path("jsa.bin");
        write_jsa(&path, &jsa, self.config_hash).map_err(storage(&path))?;
        self.record_binary(stage, &path, false)?;
        let weights = jsa.stripe_weights();
        let path = self.path("jsa_stripes.csv");
        let mut w = CsvWriter::create(&path, &["q", "weight"]).map_err(storage(&path))?;
        for (q, v) in &weights {
            w.row(&[*q as f64, *v]).map_err(storage(&path))?;
        }
        w.finish().map_err(storage(&path))?;
        self.record(stage, &path, false)?;

        self.manifest.reports.jsa = Some(JsaReport {
            points: jsa.len(),
            asymmetry: jsa.asymmetry(),
            cone_angle_mrad: cone,
            stripe_weights: weights,
        });
        self.jsa = Some(jsa);
        Ok(())
    }

    fn hom(&mut self) -> Result<(), CliError> {
        let stage = Stage::Hom;
        let h = self.cfg.analysis.hom.clone().expect("checked before the run");
        let w0 = self.pulse.omega0();
        let t0 = self.pulse.period();
        let intensities: Vec<f64> = if h.intensities.is_empty() {
            vec![self.pulse.peak_intensity_w_cm2()]
        } else {
            h.intensities.iter().map(|i| i.value()).collect()
        };
        let max_as = units::au_time_to_as(h.max_delay.au(t0));
        let step_as = units::au_time_to_as(h.delay_step.au(t0));
        let delays = default_delays(max_as, step_as);
        let collection = Collection {
            band: (h.band[0].au(w0), h.band[1].au(w0)),
            omega0: w0,
            phase_matching: None,
            orders: None,
        };

        let path = self.path("hom.csv");
        let mut w =
            CsvWriter::create(&path, &["intensity_W_cm2", "delay_as", "probability"]).map_err(storage(&path))?;
        let mut curves = Vec::new();
        for intensity in intensities {
            let k = self.amplitude(stage, intensity)?;
            let jsa =
                build_jsa(&self.amplitudes[k].amp, &collection).map_err(|e| CliError::numerical(stage)(e.into()))?;
            let curve = hom_curve(&jsa, &delays);
            for (d, p) in curve.delays.iter().zip(&curve.probability) {
                w.row(&[intensity, units::au_time_to_as(*d), *p])
                    .map_err(storage(&path))?;
            }
            let entry = HomEntry {
                intensity_w_cm2: intensity,
                probability_at_zero: curve.probability[curve.zero_index()],
                dip_fwhm_as: curve.dip_fwhm().map(units::au_time_to_as),
                half_period_extremum: curve.extremum_in(0.45 * t0, 0.55 * t0).map(|(d, p)| (d / t0, p)),
                correlation_cached: self.amplitudes[k].cached,
            };
            info!(
                "HOM at {intensity:.3e} W/cm^2: P(0) = {:.2e}, FWHM = {:?} as",
                entry.probability_at_zero, entry.dip_fwhm_as
            );
            curves.push(entry);
        }
        w.finish().map_err(storage(&path))?;
        self.record(stage, &path, false)?;
        self.manifest.reports.hom = Some(HomReport {
            period_as: units::au_time_to_as(t0),
            curves,
        });
        Ok(())
    }

    fn current_jsa(&self, stage: Stage) -> Result<&JointSpectralAmplitude, CliError> {
        self.jsa.as_ref().ok_or_else(|| CliError::StageDependencyMissing {
            stage,
            missing: "the jsa stage".into(),
        })
    }

    fn schmidt(&mut self) -> Result<(), CliError> {
        let stage = Stage::Schmidt;
        let s = &self.cfg.analysis.schmidt;
        let opts = SchmidtOptions {
            max_dim: s.max_dim,
            n_modes: s.modes,
        };
        let jsa = self.current_jsa(stage)?;
        let num = |e: sfpg_core::quantum_state::QuantumError| CliError::numerical(stage)(NumericalError::from(e));
        let full = schmidt_decompose(jsa, &opts).map_err(num)?;
        let mut stripes = Vec::new();
        for (q, weight) in jsa.stripe_weights() {
            if weight <= 1e-9 {
                continue;
            }
            let part = jsa.restricted(|k| k == q).map_err(num)?;
            let r = schmidt_decompose(&part, &opts).map_err(num)?;
            stripes.push(StripeSchmidt {
                q,
                weight,
                schmidt_number: r.schmidt_number,
                entropy: r.entropy,
            });
        }

        let path = self.path("schmidt.csv");
        let mut w = CsvWriter::create(&path, &["mode", "lambda"]).map_err(storage(&path))?;
        for (k, l) in full.lambdas.iter().enumerate() {
            w.row(&[k as f64, *l]).map_err(storage(&path))?;
        }
        w.finish().map_err(storage(&path))?;
        self.record(stage, &path, false)?;
        let path = self.path("schmidt_stripes.csv");
        let mut w = CsvWriter::create(&path, &["q", "weight", "schmidt_number", "entropy"]).map_err(storage(&path))?;
        for s in &stripes {
            w.row(&[s.q as f64, s.weight, s.schmidt_number, s.entropy])
                .map_err(storage(&path))?;
        }
        w.finish().map_err(storage(&path))?;
        self.record(stage, &path, false)?;

        info!("Schmidt number {:.3}, entropy {:.3}", full.schmidt_number, full.entropy);
        self.manifest.reports.schmidt = Some(SchmidtSummary {
            schmidt_number: full.schmidt_number,
            entropy: full.entropy,
            leading_lambdas: full.lambdas.iter().take(opts.n_modes).copied().collect(),
            stripes,
        });
        Ok(())
    }

    fn herald(&mut self) -> Result<(), CliError> {
        let stage = Stage::Herald;
        let h = self.cfg.analysis.herald.clone().expect("checked before the run");
        let w0 = self.pulse.omega0();
        let t0 = self.pulse.period();
        let own;
        let jsa = match h.band {
            Some([lo, hi]) => {
                let collection = Collection {
                    band: (lo.au(w0), hi.au(w0)),
                    omega0: w0,
                    phase_matching: None,
                    orders: None,
                };
                let k = self.amplitude(stage, self.pulse.peak_intensity_w_cm2())?;
                own = build_jsa(&self.amplitudes[k].amp, &collection)
                    .map_err(|e| CliError::numerical(stage)(e.into()))?;
                &own
            }
            None => self.current_jsa(stage)?,
        };
        let pulse = heralded_pulse(jsa, h.center.au(w0), h.bandwidth.au(w0), h.pad)
            .map_err(|e| CliError::numerical(stage)(e.into()))?;

        let path = self.path("herald.csv");
        let mut w = CsvWriter::create(&path, &["t_as", "intensity"]).map_err(storage(&path))?;
        for (t, v) in pulse.times.iter().zip(&pulse.intensity) {
            w.row(&[units::au_time_to_as(*t), *v]).map_err(storage(&path))?;
        }
        w.finish().map_err(storage(&path))?;
        self.record(stage, &path, false)?;

        self.manifest.reports.herald = Some(HeraldReport {
            orders: pulse.orders.clone(),
            train_period_t0: pulse.train_period().map(|p| p / t0),
            main_peak_fwhm_as: units::au_time_to_as(pulse.main_peak_fwhm()),
        });
        Ok(())
    }
}

fn geometry(model: &DispersionModel, length: f64, pump_photons: f64) -> InteractionGeometry {
    InteractionGeometry {
        length,
        radius: model.radius,
        density: model.density(),
        pump_photons,
    }
}

fn nearest(xs: &[f64], x: f64) -> usize {
    (0..xs.len())
        .min_by(|&a, &b| (xs[a] - x).abs().total_cmp(&(xs[b] - x).abs()))
        .unwrap_or(0)
}
