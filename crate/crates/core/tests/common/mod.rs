//! Dense-matrix reference dynamics on small grids.

#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use sfpg_core::tdse::{LaserPulse, SpatialGrid};
use sfpg_core::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Spectral kinetic energy plus soft-core potential as a dense real matrix.
pub fn hamiltonian(grid: &SpatialGrid, softening: f64) -> DMatrix<f64> {
    let n = grid.len();
    let l = grid.x_max() - grid.x_min();
    let dx = grid.spacing();
    let mut h = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut t = 0.0;
            for m in 0..n {
                let mm = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                let k = 2.0 * PI * mm / l;
                t += 0.5 * k * k * (k * (a as f64 - b as f64) * dx).cos();
            }
            h[(a, b)] = t / n as f64;
        }
        let x = grid.x(a);
        h[(a, a)] -= 1.0 / (x * x + softening * softening).sqrt();
    }
    h
}

pub struct Spectrum {
    pub energies: Vec<f64>,
    /// Columns normalized to `sum |v|^2 dx = 1`.
    pub states: DMatrix<f64>,
}

pub fn eigensystem(grid: &SpatialGrid, softening: f64) -> Spectrum {
    let eig = SymmetricEigen::new(hamiltonian(grid, softening));
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = grid.spacing().sqrt().recip();
    let mut states = DMatrix::zeros(grid.len(), grid.len());
    for (c, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).into_owned() * scale;
        // fix the sign so the ground state is positive at the centre
        if v[grid.len() / 2] < 0.0 {
            v = -v;
        }
        states.set_column(c, &v);
    }
    Spectrum {
        energies: order.iter().map(|&k| eig.eigenvalues[k]).collect(),
        states,
    }
}

pub fn ground_state(grid: &SpatialGrid, softening: f64) -> (Vec<Complex64>, f64) {
    let s = eigensystem(grid, softening);
    let v = s.states.column(0).iter().map(|&r| Complex64::new(r, 0.0)).collect();
    (v, s.energies[0])
}

/// Field-free `<x(t) x(t')>` from the spectral sum over eigenstates.
pub fn field_free_correlation(grid: &SpatialGrid, softening: f64, times: &[f64]) -> Vec<Complex64> {
    let s = eigensystem(grid, softening);
    let n = grid.len();
    let dx = grid.spacing();
    let x: Vec<f64> = grid.positions();
    let d: Vec<f64> = (0..n)
        .map(|k| (0..n).map(|j| s.states[(j, k)] * x[j] * s.states[(j, 0)]).sum::<f64>() * dx)
        .collect();
    let m = times.len();
    let mut out = vec![Complex64::default(); m * m];
    for i in 0..m {
        for j in 0..m {
            let tau = (times[i] - times[j]).abs();
            out[i * m + j] = (0..n)
                .map(|k| Complex64::from_polar(d[k] * d[k], -(s.energies[k] - s.energies[0]) * tau))
                .sum();
        }
    }
    out
}

fn hermitian_expm(k: &CMat) -> CMat {
    let eig = SymmetricEigen::new(k.clone());
    let v = &eig.eigenvectors;
    let phases = CMat::from_diagonal(&CVec::from_iterator(
        k.nrows(),
        eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e)),
    ));
    v * phases * v.adjoint()
}

/// Time-ordered propagators `U(t_k, 0)` at `store_every` multiples of `dt`,
/// from a fourth-order Magnus integrator with dense exponentials.
pub fn magnus_propagators(
    grid: &SpatialGrid,
    softening: f64,
    pulse: &LaserPulse,
    dt: f64,
    n_steps: usize,
    store_every: usize,
) -> Vec<CMat> {
    let n = grid.len();
    let h0 = hamiltonian(grid, softening).map(|r| Complex64::new(r, 0.0));
    let x = CMat::from_diagonal(&CVec::from_iterator(
        n,
        grid.positions().into_iter().map(|v| Complex64::new(v, 0.0)),
    ));
    let c = 3f64.sqrt() / 6.0;
    let mut u = CMat::identity(n, n);
    let mut out = vec![u.clone()];
    for s in 0..n_steps {
        let t = s as f64 * dt;
        let h1 = &h0 + &x * Complex64::from(pulse.field(t + (0.5 - c) * dt));
        let h2 = &h0 + &x * Complex64::from(pulse.field(t + (0.5 + c) * dt));
        let comm = &h1 * &h2 - &h2 * &h1;
        let k = (&h1 + &h2) * Complex64::from(0.5 * dt) + comm * Complex64::new(0.0, 3f64.sqrt() / 12.0 * dt * dt);
        u = hermitian_expm(&k) * u;
        if (s + 1) % store_every == 0 {
            out.push(u.clone());
        }
    }
    out
}

/// `<x(t_i) x(t_j)>` for `t_i >= t_j` assembled as
/// `psi0^+ U_i^+ x U_i U_j^+ x U_j psi0`, filled symmetrically.
pub fn driven_correlation(grid: &SpatialGrid, psi0: &[Complex64], us: &[CMat]) -> Vec<Complex64> {
    let n = grid.len();
    let dx = grid.spacing();
    let x: Vec<f64> = grid.positions();
    let psi0 = CVec::from_column_slice(psi0);
    let states: Vec<CVec> = us.iter().map(|u| u * &psi0).collect();
    let m = us.len();
    let mut out = vec![Complex64::default(); m * m];
    for j in 0..m {
        let xb = CVec::from_iterator(n, states[j].iter().zip(&x).map(|(a, xi)| a * xi));
        let back = us[j].adjoint() * xb;
        for i in j..m {
            let fwd = &us[i] * &back;
            let v: Complex64 = states[i]
                .iter()
                .zip(&x)
                .zip(fwd.iter())
                .map(|((a, xi), f)| a.conj() * xi * f)
                .sum::<Complex64>()
                * dx;
            out[i * m + j] = v;
            out[j * m + i] = v;
        }
    }
    out
}

pub fn max_relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}
