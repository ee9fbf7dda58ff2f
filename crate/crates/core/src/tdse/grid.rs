use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::TdseError;

/// Uniform, periodic 1D grid with cell-centred nodes
/// `x_j = x_min + (j + 1/2) dx`, so that `x -> -x` maps node `j` onto node
/// `n - 1 - j` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self, TdseError> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(TdseError::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(x_max > 0.0) || !x_max.is_finite() || (x_max + x_min).abs() > 1e-12 * x_max {
            return Err(TdseError::InvalidGrid(format!(
                "grid must be symmetric with x_max = -x_min > 0, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self, TdseError> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        // centred offset keeps x(j) == -x(mirror(j)) bit-exact
        (j as f64 + 0.5 - 0.5 * self.n_points as f64) * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// FFT-ordered angular wavenumbers.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                m * dk
            })
            .collect()
    }

    /// Index of the mirror image of node `j` under `x -> -x`.
    pub fn mirror(&self, j: usize) -> usize {
        self.n_points - 1 - j
    }

    /// `sum |psi|^2 dx`
    pub fn norm_sqr(&self, psi: &[Complex64]) -> f64 {
        psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()
    }

    /// `<a|b> = sum conj(a) b dx`
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * self.spacing()
    }

    /// `<psi|x|psi>`
    pub fn expect_x(&self, psi: &[Complex64]) -> f64 {
        psi.iter()
            .enumerate()
            .map(|(j, z)| self.x(j) * z.norm_sqr())
            .sum::<f64>()
            * self.spacing()
    }
}

/// Forward/inverse FFT pair of the grid size. Plans are shareable across
/// threads; scratch space is owned by each user.
#[derive(Clone)]
pub(crate) struct FftPair {
    pub fwd: Arc<dyn Fft<f64>>,
    pub inv: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn scratch_len(&self) -> usize {
        self.fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(SpatialGrid::symmetric(10.0, 100).is_err());
        assert!(SpatialGrid::symmetric(10.0, 4).is_err());
        assert!(SpatialGrid::new(-10.0, 12.0, 64).is_err());
        assert!(SpatialGrid::symmetric(-1.0, 64).is_err());
    }

    #[test]
    fn nodes_are_mirror_symmetric() {
        let g = SpatialGrid::symmetric(240.0, 4096).unwrap();
        assert!((g.spacing() - 480.0 / 4096.0).abs() < 1e-15);
        for j in [0, 1, 17, 2047] {
            assert_eq!(g.x(j), -g.x(g.mirror(j)));
        }
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert!(k[4095] < 0.0);
    }
}
