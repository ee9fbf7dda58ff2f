use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use super::{AtomModel, FftPair, LaserPulse, SpatialGrid, TdseError};

/// Multiplicative edge mask `cos(pi/2 * s)^exponent`, `s` running from 0 to 1
/// across the outer `fraction` of the grid width on each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Absorber {
    pub fraction: f64,
    pub exponent: f64,
}

impl Default for Absorber {
    fn default() -> Self {
        Self {
            fraction: 0.125,
            exponent: 0.125,
        }
    }
}

impl Absorber {
    pub fn mask(&self, grid: &SpatialGrid) -> Vec<f64> {
        let width = grid.x_max() - grid.x_min();
        let start = grid.x_max() - self.fraction * width;
        grid.positions()
            .into_iter()
            .map(|x| {
                let d = x.abs() - start;
                if d <= 0.0 {
                    1.0
                } else {
                    (FRAC_PI_2 * d / (grid.x_max() - start))
                        .cos()
                        .max(0.0)
                        .powf(self.exponent)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSettings {
    /// Requested time step; the effective step is shrunk slightly so that the
    /// pulse is covered by a whole number of stored samples.
    pub dt: f64,
    pub absorber: Option<Absorber>,
    pub store_stride: usize,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            dt: 0.05,
            absorber: Some(Absorber::default()),
            store_stride: 5,
        }
    }
}

impl PropagationSettings {
    pub fn validate(&self) -> Result<(), TdseError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(TdseError::InvalidSettings(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.store_stride == 0 {
            return Err(TdseError::InvalidSettings("store_stride must be >= 1".into()));
        }
        if let Some(a) = self.absorber {
            if !(a.fraction > 0.0 && a.fraction < 0.5) || !(a.exponent > 0.0) {
                return Err(TdseError::InvalidSettings(format!(
                    "absorber fraction must lie in (0, 0.5) and exponent be > 0, got {a:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn time_grid(&self, duration: f64) -> TimeGrid {
        let block = self.dt * self.store_stride as f64;
        let n_stored = (duration / block - 1e-9).ceil().max(1.0) as usize;
        let n_steps = n_stored * self.store_stride;
        TimeGrid {
            dt: duration / n_steps as f64,
            n_steps,
            store_stride: self.store_stride,
        }
    }
}

/// Fine propagation grid and the stored sub-grid (every `store_stride` steps,
/// including both end points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
    pub store_stride: usize,
}

impl TimeGrid {
    pub fn n_stored(&self) -> usize {
        self.n_steps / self.store_stride + 1
    }

    pub fn stored_spacing(&self) -> f64 {
        self.dt * self.store_stride as f64
    }

    pub fn stored_time(&self, i: usize) -> f64 {
        (i * self.store_stride) as f64 * self.dt
    }
}

/// Second-order split-operator stepper for `H = p^2/2 + V(x) + x E(t)`.
///
/// Each step applies `e^{-i V_mid dt/2} e^{-i T dt} e^{-i V_mid dt/2}` with the
/// field evaluated at the step midpoint, then the absorbing mask.
#[derive(Clone)]
pub struct Propagator {
    x: Vec<f64>,
    dx: f64,
    dt: f64,
    fft: FftPair,
    kinetic: Vec<Complex64>,
    static_half: Vec<Complex64>,
    mask: Option<Vec<f64>>,
    half: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Exact phase factors are refreshed every this many nodes when building
/// `e^{-i x E dt/2}` by recurrence.
const PHASE_BLOCK: usize = 32;

impl Propagator {
    pub fn new(atom: &AtomModel, dt: f64, absorber: Option<Absorber>) -> Self {
        let grid = atom.grid();
        let n = grid.len();
        let fft = FftPair::new(n);
        let inv_n = 1.0 / n as f64;
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|k| Complex64::from_polar(inv_n, -0.5 * k * k * dt))
            .collect();
        let static_half = atom
            .potential()
            .iter()
            .map(|v| Complex64::from_polar(1.0, -0.5 * v * dt))
            .collect();
        let scratch = vec![Complex64::default(); fft.scratch_len()];
        Self {
            x: grid.positions(),
            dx: grid.spacing(),
            dt,
            fft,
            kinetic,
            static_half,
            mask: absorber.map(|a| a.mask(grid)),
            half: vec![Complex64::default(); n],
            scratch,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn build_half_step(&mut self, field: f64) {
        if field == 0.0 {
            self.half.copy_from_slice(&self.static_half);
            return;
        }
        let s = -0.5 * field * self.dt;
        let ratio = Complex64::from_polar(1.0, s * self.dx);
        for (b, chunk) in self.half.chunks_mut(PHASE_BLOCK).enumerate() {
            let j0 = b * PHASE_BLOCK;
            let mut z = Complex64::from_polar(1.0, s * self.x[j0]);
            for (k, h) in chunk.iter_mut().enumerate() {
                *h = self.static_half[j0 + k] * z;
                z *= ratio;
            }
        }
    }

    /// Advance `psi` by one step with midpoint field value `field`.
    pub fn step(&mut self, psi: &mut [Complex64], field: f64) {
        self.build_half_step(field);
        self.apply(psi);
    }

    /// Advance several wavefunctions through the same step.
    pub fn step_many(&mut self, psis: &mut [&mut [Complex64]], field: f64) {
        self.build_half_step(field);
        for psi in psis.iter_mut() {
            self.apply(psi);
        }
    }

    fn apply(&mut self, psi: &mut [Complex64]) {
        for (p, h) in psi.iter_mut().zip(&self.half) {
            *p *= h;
        }
        self.fft.fwd.process_with_scratch(psi, &mut self.scratch);
        for (p, k) in psi.iter_mut().zip(&self.kinetic) {
            *p *= k;
        }
        self.fft.inv.process_with_scratch(psi, &mut self.scratch);
        match &self.mask {
            Some(mask) => {
                for ((p, h), m) in psi.iter_mut().zip(&self.half).zip(mask) {
                    *p *= h * m;
                }
            }
            None => {
                for (p, h) in psi.iter_mut().zip(&self.half) {
                    *p *= h;
                }
            }
        }
    }
}

/// `<x(t)>` sampled on the stored time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleRecord {
    pub times: Vec<f64>,
    pub dipole: Vec<f64>,
    /// Cumulative probability removed by the absorber.
    pub norm_loss: Vec<f64>,
}

impl DipoleRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }
}

pub(crate) fn check_finite(psi: &[Complex64], time: f64) -> Result<(), TdseError> {
    if psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(TdseError::NumericalBlowup { time })
    }
}

/// Propagate the ground state of `atom` through `pulse` and record `<x(t)>`.
pub fn propagate(
    atom: &AtomModel,
    pulse: &LaserPulse,
    settings: &PropagationSettings,
) -> Result<DipoleRecord, TdseError> {
    settings.validate()?;
    let tg = settings.time_grid(pulse.duration());
    let grid = atom.grid();
    let mut prop = Propagator::new(atom, tg.dt, settings.absorber);
    let mut psi = atom.ground_state().to_vec();

    let n_stored = tg.n_stored();
    let mut record = DipoleRecord {
        times: Vec::with_capacity(n_stored),
        dipole: Vec::with_capacity(n_stored),
        norm_loss: Vec::with_capacity(n_stored),
    };
    let store = |psi: &[Complex64], i: usize, rec: &mut DipoleRecord| {
        rec.times.push(tg.stored_time(i));
        rec.dipole.push(grid.expect_x(psi));
        rec.norm_loss.push(1.0 - grid.norm_sqr(psi));
    };
    store(&psi, 0, &mut record);
    for n in 0..tg.n_steps {
        let t_mid = (n as f64 + 0.5) * tg.dt;
        prop.step(&mut psi, pulse.field(t_mid));
        if (n + 1) % tg.store_stride == 0 {
            let i = (n + 1) / tg.store_stride;
            check_finite(&psi, tg.stored_time(i))?;
            store(&psi, i, &mut record);
        }
    }
    let loss = *record.norm_loss.last().unwrap_or(&0.0);
    if loss > 0.5 {
        return Err(TdseError::ExcessiveAbsorption { loss });
    }
    Ok(record)
}
