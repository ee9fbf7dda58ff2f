use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::units;

use super::{FftPair, SpatialGrid, TdseError};

/// Soft-core model atom `V(x) = -1/sqrt(x^2 + a^2)` together with its
/// (even, normalized) ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomModel {
    grid: SpatialGrid,
    softening: f64,
    potential: Vec<f64>,
    ground_state: Vec<Complex64>,
    ground_energy: f64,
}

impl AtomModel {
    /// Ground state for a fixed softening parameter (no tuning).
    pub fn relaxed(grid: SpatialGrid, softening: f64, opts: &GroundStateOptions) -> Result<Self, TdseError> {
        let mut solver = GroundStateSolver::new(grid, opts);
        let (state, energy) = solver.solve(softening, None)?;
        Ok(Self::assemble(grid, softening, state, energy))
    }

    /// Build a model from an externally supplied bound state (normalized and
    /// symmetrized here).
    pub fn from_state(
        grid: SpatialGrid,
        softening: f64,
        state: Vec<Complex64>,
        energy: f64,
    ) -> Result<Self, TdseError> {
        if state.len() != grid.len() {
            return Err(TdseError::InvalidGrid(format!(
                "state has {} points, grid has {}",
                state.len(),
                grid.len()
            )));
        }
        let mut state = state;
        normalize(&grid, &mut state);
        Ok(Self::assemble(grid, softening, state, energy))
    }

    fn assemble(grid: SpatialGrid, softening: f64, state: Vec<Complex64>, energy: f64) -> Self {
        Self {
            potential: soft_core_potential(&grid, softening),
            grid,
            softening,
            ground_state: state,
            ground_energy: energy,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn softening(&self) -> f64 {
        self.softening
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn ground_state(&self) -> &[Complex64] {
        &self.ground_state
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    /// Ionization energy `I_p = -E_0` in a.u.
    pub fn ionization_energy(&self) -> f64 {
        -self.ground_energy
    }

    pub fn ionization_energy_ev(&self) -> f64 {
        units::au_to_ev(self.ionization_energy())
    }
}

pub fn soft_core_potential(grid: &SpatialGrid, softening: f64) -> Vec<f64> {
    let a2 = softening * softening;
    grid.positions().iter().map(|x| -1.0 / (x * x + a2).sqrt()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateOptions {
    pub softening_bracket: (f64, f64),
    /// Required `|E_0 + I_p|` of the tuned model (a.u.).
    pub energy_tolerance: f64,
    /// Required `||H psi - E psi||` of the returned state.
    pub residual_tolerance: f64,
    /// Largest admissible `|psi|` at the first/last grid node.
    pub boundary_tolerance: f64,
    pub imaginary_dt: f64,
    pub max_imaginary_steps: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub max_root_iterations: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            softening_bracket: (0.5, 3.0),
            energy_tolerance: 1e-9,
            residual_tolerance: 1e-9,
            boundary_tolerance: 1e-10,
            imaginary_dt: 0.05,
            max_imaginary_steps: 20_000,
            krylov_dim: 40,
            max_restarts: 60,
            max_root_iterations: 200,
        }
    }
}

/// Tune the softening so the ground-state energy equals `-target_ip`.
pub fn find_ground_state(grid: SpatialGrid, target_ip: f64) -> Result<AtomModel, TdseError> {
    find_ground_state_with(grid, target_ip, &GroundStateOptions::default())
}

pub fn find_ground_state_with(
    grid: SpatialGrid,
    target_ip: f64,
    opts: &GroundStateOptions,
) -> Result<AtomModel, TdseError> {
    if !(target_ip > 0.0) {
        return Err(TdseError::InvalidSettings(format!(
            "target ionization energy must be > 0, got {target_ip}"
        )));
    }
    let mut solver = GroundStateSolver::new(grid, opts);
    let (lo, hi) = opts.softening_bracket;
    let target = -target_ip;

    // E(a) increases monotonically with the softening a.
    let (mut a_lo, mut a_hi) = (lo, hi);
    let (psi_lo, e_lo) = solver.solve(a_lo, None)?;
    let (psi_hi, e_hi) = solver.solve(a_hi, None)?;
    let (mut f_lo, mut f_hi) = (e_lo - target, e_hi - target);
    if f_lo.abs() <= opts.energy_tolerance {
        return Ok(AtomModel::assemble(grid, a_lo, psi_lo, e_lo));
    }
    if f_hi.abs() <= opts.energy_tolerance {
        return Ok(AtomModel::assemble(grid, a_hi, psi_hi, e_hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(TdseError::RootBracketFailure { lo, hi, target });
    }

    // Illinois-modified regula falsi with a bisection safeguard.
    let mut warm = psi_lo;
    let mut side = 0i8;
    for _ in 0..opts.max_root_iterations {
        let mut a = (a_lo * f_hi - a_hi * f_lo) / (f_hi - f_lo);
        if !(a > a_lo && a < a_hi) {
            a = 0.5 * (a_lo + a_hi);
        }
        let (psi, e) = solver.solve(a, Some(&warm))?;
        let f = e - target;
        if f.abs() <= opts.energy_tolerance {
            return Ok(AtomModel::assemble(grid, a, psi, e));
        }
        if f.signum() == f_lo.signum() {
            a_lo = a;
            f_lo = f;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            a_hi = a;
            f_hi = f;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
        warm = psi;
        if (a_hi - a_lo) < 1e-14 {
            break;
        }
    }
    Err(TdseError::NonConvergence {
        residual: f_lo.abs().min(f_hi.abs()),
    })
}

fn normalize(grid: &SpatialGrid, psi: &mut [Complex64]) {
    let norm = grid.norm_sqr(psi).sqrt();
    for z in psi.iter_mut() {
        *z /= norm;
    }
}

/// Imaginary-time split-operator relaxation followed by a restarted Lanczos
/// polish, so the returned state is an eigenvector of the discrete
/// Hamiltonian rather than of the split-step map.
struct GroundStateSolver<'a> {
    grid: SpatialGrid,
    opts: &'a GroundStateOptions,
    fft: FftPair,
    half_kinetic: Vec<f64>,
    scratch: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl<'a> GroundStateSolver<'a> {
    fn new(grid: SpatialGrid, opts: &'a GroundStateOptions) -> Self {
        let fft = FftPair::new(grid.len());
        let scratch = vec![Complex64::default(); fft.scratch_len()];
        Self {
            half_kinetic: grid.wavenumbers().iter().map(|k| 0.5 * k * k).collect(),
            work: vec![Complex64::default(); grid.len()],
            grid,
            opts,
            fft,
            scratch,
        }
    }

    /// `out = H psi`
    fn apply_h(&mut self, potential: &[f64], psi: &[Complex64], out: &mut [Complex64]) {
        let inv_n = 1.0 / psi.len() as f64;
        out.copy_from_slice(psi);
        self.fft.fwd.process_with_scratch(out, &mut self.scratch);
        for (z, t) in out.iter_mut().zip(&self.half_kinetic) {
            *z *= t * inv_n;
        }
        self.fft.inv.process_with_scratch(out, &mut self.scratch);
        for ((o, p), v) in out.iter_mut().zip(psi).zip(potential) {
            *o += p * v;
        }
    }

    fn energy(&mut self, potential: &[f64], psi: &[Complex64]) -> f64 {
        let mut hpsi = std::mem::take(&mut self.work);
        self.apply_h(potential, psi, &mut hpsi);
        let e = self.grid.inner(psi, &hpsi).re / self.grid.norm_sqr(psi);
        self.work = hpsi;
        e
    }

    fn residual(&mut self, potential: &[f64], psi: &[Complex64], e: f64) -> f64 {
        let mut hpsi = std::mem::take(&mut self.work);
        self.apply_h(potential, psi, &mut hpsi);
        let r = hpsi.iter().zip(psi).map(|(h, p)| (h - p * e).norm_sqr()).sum::<f64>() * self.grid.spacing();
        self.work = hpsi;
        (r / self.grid.norm_sqr(psi)).sqrt()
    }

    fn solve(&mut self, softening: f64, initial: Option<&[Complex64]>) -> Result<(Vec<Complex64>, f64), TdseError> {
        let potential = soft_core_potential(&self.grid, softening);
        let mut psi: Vec<Complex64> = match initial {
            Some(p) => p.to_vec(),
            None => self
                .grid
                .positions()
                .iter()
                .map(|x| Complex64::new((-0.5 * x * x).exp(), 0.0))
                .collect(),
        };
        normalize(&self.grid, &mut psi);
        self.imaginary_time(&potential, &mut psi);
        let energy = self.lanczos_polish(&potential, &mut psi)?;
        self.symmetrize(&mut psi);
        normalize(&self.grid, &mut psi);
        // Fix the global sign so the state is positive at the origin.
        let mid = psi.len() / 2;
        if psi[mid].re < 0.0 {
            psi.iter_mut().for_each(|z| *z = -*z);
        }
        let edge = psi[0].norm().max(psi[psi.len() - 1].norm());
        if edge > self.opts.boundary_tolerance {
            return Err(TdseError::BoundaryLeak { amplitude: edge });
        }
        Ok((psi, energy))
    }

    fn imaginary_time(&mut self, potential: &[f64], psi: &mut [Complex64]) {
        let tau = self.opts.imaginary_dt;
        let n = psi.len();
        let inv_n = 1.0 / n as f64;
        let half_v: Vec<f64> = potential.iter().map(|v| (-0.5 * v * tau).exp()).collect();
        let kin: Vec<f64> = self.half_kinetic.iter().map(|t| (-t * tau).exp() * inv_n).collect();
        let mut last = self.energy(potential, psi);
        let check_every = 50;
        for step in 1..=self.opts.max_imaginary_steps {
            for (p, h) in psi.iter_mut().zip(&half_v) {
                *p *= h;
            }
            self.fft.fwd.process_with_scratch(psi, &mut self.scratch);
            for (p, k) in psi.iter_mut().zip(&kin) {
                *p *= k;
            }
            self.fft.inv.process_with_scratch(psi, &mut self.scratch);
            for (p, h) in psi.iter_mut().zip(&half_v) {
                *p *= h;
            }
            normalize(&self.grid, psi);
            if step % check_every == 0 {
                let e = self.energy(potential, psi);
                if (e - last).abs() < 1e-8 {
                    break;
                }
                last = e;
            }
        }
    }

    fn lanczos_polish(&mut self, potential: &[f64], psi: &mut [Complex64]) -> Result<f64, TdseError> {
        let n = psi.len();
        let m = self.opts.krylov_dim.min(n);
        let mut energy = self.energy(potential, psi);
        let mut residual = self.residual(potential, psi, energy);
        for _ in 0..self.opts.max_restarts {
            if residual <= self.opts.residual_tolerance {
                return Ok(energy);
            }
            // Krylov basis in the plain Euclidean inner product.
            let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m);
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            basis.push(psi.iter().map(|z| z / norm).collect());
            let mut alpha = Vec::with_capacity(m);
            let mut beta: Vec<f64> = Vec::with_capacity(m);
            let mut w = vec![Complex64::default(); n];
            for k in 0..m {
                self.apply_h(potential, &basis[k], &mut w);
                let a = dot(&basis[k], &w).re;
                alpha.push(a);
                // Full reorthogonalization, twice.
                for _ in 0..2 {
                    for b in &basis {
                        let c = dot(b, &w);
                        for (wi, bi) in w.iter_mut().zip(b) {
                            *wi -= bi * c;
                        }
                    }
                }
                let bnorm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if k + 1 == m || bnorm < 1e-14 {
                    break;
                }
                beta.push(bnorm);
                basis.push(w.iter().map(|z| z / bnorm).collect());
            }
            let dim = alpha.len();
            let mut t = DMatrix::<f64>::zeros(dim, dim);
            for i in 0..dim {
                t[(i, i)] = alpha[i];
                if i + 1 < dim {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imin, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
            let y = eig.eigenvectors.column(imin);
            psi.iter_mut().for_each(|z| *z = Complex64::default());
            for (b, &c) in basis.iter().zip(y.iter()) {
                for (p, bi) in psi.iter_mut().zip(b) {
                    *p += bi * c;
                }
            }
            normalize(&self.grid, psi);
            energy = self.energy(potential, psi);
            residual = self.residual(potential, psi, energy);
        }
        if residual <= self.opts.residual_tolerance {
            Ok(energy)
        } else {
            Err(TdseError::NonConvergence { residual })
        }
    }

    fn symmetrize(&self, psi: &mut [Complex64]) {
        let n = psi.len();
        for j in 0..n / 2 {
            let m = self.grid.mirror(j);
            let avg = 0.5 * (psi[j] + psi[m]);
            psi[j] = avg;
            psi[m] = avg;
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_softening_matches_soft_core_hydrogen() {
        let grid = SpatialGrid::symmetric(40.0, 512).unwrap();
        let atom = AtomModel::relaxed(grid, 1.0, &GroundStateOptions::default()).unwrap();
        assert!((atom.ground_energy() + 0.6698).abs() < 1e-4, "{}", atom.ground_energy());
        assert!((grid.norm_sqr(atom.ground_state()) - 1.0).abs() < 1e-12);
        assert!(grid.expect_x(atom.ground_state()).abs() < 1e-14);
        for j in 0..grid.len() {
            assert_eq!(atom.ground_state()[j], atom.ground_state()[grid.mirror(j)]);
        }
    }

    #[test]
    fn reports_boundary_leak_on_tiny_grid() {
        let grid = SpatialGrid::symmetric(6.0, 64).unwrap();
        let err = AtomModel::relaxed(grid, 1.0, &GroundStateOptions::default()).unwrap_err();
        assert!(matches!(err, TdseError::BoundaryLeak { .. }), "{err:?}");
    }

    #[test]
    fn reports_unbracketed_target() {
        let grid = SpatialGrid::symmetric(60.0, 512).unwrap();
        // Far deeper than any softening >= 0.5 can reach.
        let err = find_ground_state(grid, 5.0).unwrap_err();
        assert!(matches!(err, TdseError::RootBracketFailure { .. }), "{err:?}");
        assert!(find_ground_state(grid, -1.0).is_err());
    }

    #[test]
    fn tuned_energy_hits_target() {
        let grid = SpatialGrid::symmetric(60.0, 512).unwrap();
        let ip = units::ev_to_au(21.56);
        let atom = find_ground_state(grid, ip).unwrap();
        assert!((atom.ground_energy() + ip).abs() < 1e-6);
        assert!(atom.softening() > 0.5 && atom.softening() < 3.0);
    }
}
