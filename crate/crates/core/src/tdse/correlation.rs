use num_complex::Complex64;
use rayon::prelude::*;

use super::propagate::check_finite;
use super::{AtomModel, LaserPulse, PropagationSettings, Propagator, TdseError};

/// Time-ordered dipole correlation `C_xx(t, t')` on a uniform time grid,
/// stored row-major. Connected when the product of one-time expectations has
/// been subtracted.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    times: Vec<f64>,
    values: Vec<Complex64>,
    connected: bool,
}

impl CorrelationMatrix {
    /// Build from raw data; enforces squareness, finiteness and the
    /// `C(t, t') = C(t', t)` symmetry bit-for-bit.
    pub fn from_parts(times: Vec<f64>, values: Vec<Complex64>, connected: bool) -> Result<Self, TdseError> {
        let n = times.len();
        if values.len() != n * n {
            return Err(TdseError::InvalidSettings(format!(
                "correlation matrix has {} entries for {} times",
                values.len(),
                n
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(TdseError::InvalidSettings("times must increase strictly".into()));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TdseError::NumericalBlowup { time: f64::NAN });
        }
        for i in 0..n {
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(TdseError::InvalidSettings(format!(
                        "correlation matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self {
            times,
            values,
            connected,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn spacing(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.times.len() + j]
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }
}

/// Two-time correlation by the propagate-apply-propagate construction: for
/// every sampled `t'` the auxiliary state `x psi(t')` is carried forward with
/// the same propagator and projected onto `x psi(t)` for all `t >= t'`.
///
/// Columns are independent and run in parallel; each owns its buffers, so the
/// result does not depend on the thread count.
pub fn two_time_correlation(
    atom: &AtomModel,
    pulse: &LaserPulse,
    settings: &PropagationSettings,
    coarse_stride: usize,
) -> Result<CorrelationMatrix, TdseError> {
    correlate(atom, pulse, settings, coarse_stride, true)
}

/// Same as [`two_time_correlation`] without the `<x(t)><x(t')>` subtraction.
pub fn two_time_correlation_raw(
    atom: &AtomModel,
    pulse: &LaserPulse,
    settings: &PropagationSettings,
    coarse_stride: usize,
) -> Result<CorrelationMatrix, TdseError> {
    correlate(atom, pulse, settings, coarse_stride, false)
}

fn correlate(
    atom: &AtomModel,
    pulse: &LaserPulse,
    settings: &PropagationSettings,
    coarse_stride: usize,
    connected: bool,
) -> Result<CorrelationMatrix, TdseError> {
    settings.validate()?;
    if coarse_stride == 0 {
        return Err(TdseError::InvalidSettings("coarse_stride must be >= 1".into()));
    }
    let tg = settings.time_grid(pulse.duration());
    let grid = *atom.grid();
    let dx = grid.spacing();
    let x = grid.positions();
    let step_stride = tg.store_stride * coarse_stride;
    let n_t = tg.n_steps / step_stride + 1;
    let fields: Vec<f64> = (0..tg.n_steps).map(|n| pulse.field((n as f64 + 0.5) * tg.dt)).collect();
    let time_of = |c: usize| (c * step_stride) as f64 * tg.dt;

    // Reference trajectory, snapshot at every correlation sample.
    let base = Propagator::new(atom, tg.dt, settings.absorber);
    let mut prop = base.clone();
    let mut psi = atom.ground_state().to_vec();
    let mut snapshots: Vec<Vec<Complex64>> = Vec::with_capacity(n_t);
    snapshots.push(psi.clone());
    for (n, &f) in fields.iter().enumerate() {
        prop.step(&mut psi, f);
        if (n + 1) % step_stride == 0 {
            check_finite(&psi, time_of(snapshots.len()))?;
            snapshots.push(psi.clone());
        }
    }
    let loss = 1.0 - grid.norm_sqr(&psi);
    if loss > 0.5 {
        return Err(TdseError::ExcessiveAbsorption { loss });
    }
    let mean_x: Vec<f64> = snapshots.iter().map(|s| grid.expect_x(s)).collect();

    // x psi(t), reused as the bra of every projection.
    let x_snapshots: Vec<Vec<Complex64>> = snapshots
        .iter()
        .map(|s| s.iter().zip(&x).map(|(p, xi)| p * xi).collect())
        .collect();
    drop(snapshots);

    let columns: Vec<Vec<Complex64>> = (0..n_t)
        .into_par_iter()
        .map(|start| -> Result<Vec<Complex64>, TdseError> {
            let mut prop = base.clone();
            let mut phi = x_snapshots[start].clone();
            let project = |bra: &[Complex64], ket: &[Complex64]| -> Complex64 {
                bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum::<Complex64>() * dx
            };
            let mut col = Vec::with_capacity(n_t - start);
            col.push(project(&x_snapshots[start], &phi));
            for (n, &field) in fields.iter().enumerate().take(tg.n_steps).skip(start * step_stride) {
                prop.step(&mut phi, field);
                if (n + 1) % step_stride == 0 {
                    let c = (n + 1) / step_stride;
                    check_finite(&phi, time_of(c))?;
                    col.push(project(&x_snapshots[c], &phi));
                }
            }
            Ok(col)
        })
        .collect::<Result<_, _>>()?;

    let mut values = vec![Complex64::default(); n_t * n_t];
    for (j, col) in columns.iter().enumerate() {
        for (k, &v) in col.iter().enumerate() {
            let i = j + k;
            let c = if connected { v - mean_x[i] * mean_x[j] } else { v };
            values[i * n_t + j] = c;
            values[j * n_t + i] = c;
        }
    }
    let times = (0..n_t).map(time_of).collect();
    CorrelationMatrix::from_parts(times, values, connected)
}
