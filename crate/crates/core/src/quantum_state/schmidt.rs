use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{JointSpectralAmplitude, QuantumError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchmidtOptions {
    /// Grids larger than this are bilinearly resampled before the SVD.
    pub max_dim: usize,
    /// Number of leading mode pairs returned.
    pub n_modes: usize,
}

impl Default for SchmidtOptions {
    fn default() -> Self {
        Self {
            max_dim: 512,
            n_modes: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtReport {
    /// Descending, summing to one.
    pub lambdas: Vec<f64>,
    pub schmidt_number: f64,
    pub entropy: f64,
    /// Frequency axis of the mode functions.
    pub omegas: Vec<f64>,
    pub signal_modes: Vec<Vec<Complex64>>,
    pub idler_modes: Vec<Vec<Complex64>>,
}

fn resample(jsa: &JointSpectralAmplitude, m: usize) -> (Vec<f64>, Vec<Complex64>) {
    let n = jsa.len();
    let (w_lo, w_hi) = (jsa.omegas[0], jsa.omegas[n - 1]);
    let omegas: Vec<f64> = (0..m)
        .map(|k| w_lo + (w_hi - w_lo) * k as f64 / (m - 1) as f64)
        .collect();
    let locate = |w: f64| {
        let x = (w - w_lo) / jsa.bin_width();
        let i = (x.floor() as usize).min(n - 2);
        (i, x - i as f64)
    };
    let mut v = vec![Complex64::default(); m * m];
    for a in 0..m {
        let (i, fx) = locate(omegas[a]);
        for b in 0..m {
            let (j, fy) = locate(omegas[b]);
            v[a * m + b] = jsa.get(i, j) * ((1.0 - fx) * (1.0 - fy))
                + jsa.get(i + 1, j) * (fx * (1.0 - fy))
                + jsa.get(i, j + 1) * ((1.0 - fx) * fy)
                + jsa.get(i + 1, j + 1) * (fx * fy);
        }
    }
    (omegas, v)
}

/// Schmidt decomposition of the discretized amplitude `J dw`.
pub fn schmidt_decompose(jsa: &JointSpectralAmplitude, opts: &SchmidtOptions) -> Result<SchmidtReport, QuantumError> {
    let (omegas, values) = if jsa.len() > opts.max_dim {
        let (o, v) = resample(jsa, opts.max_dim);
        let j = JointSpectralAmplitude::from_grid(o, v, jsa.omega0)?;
        (j.omegas, j.values)
    } else {
        (jsa.omegas.clone(), jsa.values.clone())
    };
    let n = omegas.len();
    let dw = omegas[1] - omegas[0];
    let mat = DMatrix::from_fn(n, n, |i, j| values[i * n + j] * dw);
    let svd = mat
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| QuantumError::SvdFailure("no convergence".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let raw: Vec<f64> = order.iter().map(|&k| svd.singular_values[k].powi(2)).collect();
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(QuantumError::SvdFailure(format!("singular values sum to {total}")));
    }
    let lambdas: Vec<f64> = raw.iter().map(|l| l / total).collect();
    let schmidt_number = 1.0 / lambdas.iter().map(|l| l * l).sum::<f64>();
    let entropy = -lambdas.iter().filter(|&&l| l > 0.0).map(|l| l * l.ln()).sum::<f64>();
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| QuantumError::SvdFailure("missing U".into()))?;
    let vt = svd
        .v_t
        .as_ref()
        .ok_or_else(|| QuantumError::SvdFailure("missing V".into()))?;
    let scale = dw.sqrt().recip();
    let k_max = opts.n_modes.min(order.len());
    let signal_modes = order[..k_max]
        .iter()
        .map(|&k| u.column(k).iter().map(|z| z * scale).collect())
        .collect();
    let idler_modes = order[..k_max]
        .iter()
        .map(|&k| vt.row(k).iter().map(|z| z.conj() * scale).collect())
        .collect();
    Ok(SchmidtReport {
        lambdas,
        schmidt_number,
        entropy: entropy.max(0.0),
        omegas,
        signal_modes,
        idler_modes,
    })
}
