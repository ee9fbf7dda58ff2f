use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use sfpg_core::quantum_state::{schmidt_decompose, JointSpectralAmplitude, SchmidtOptions};
use sfpg_core::spectra::{pair_amplitude, PairOptions};
use sfpg_core::tdse::{
    find_ground_state, two_time_correlation, Absorber, AtomModel, EnvelopeKind, LaserPulse, PropagationSettings,
    Propagator, SpatialGrid,
};
use sfpg_core::{units, Complex64};

fn neon(half_width: f64, points: usize) -> AtomModel {
    let grid = SpatialGrid::symmetric(half_width, points).unwrap();
    find_ground_state(grid, units::ev_to_au(21.56)).unwrap()
}

fn propagator_step(c: &mut Criterion) {
    let atom = neon(100.0, 512);
    let mut prop = Propagator::new(&atom, 0.14, Some(Absorber::default()));
    let mut psi = atom.ground_state().to_vec();
    c.bench_function("propagator_step_512", |b| {
        b.iter(|| prop.step(black_box(&mut psi), 0.05));
    });
}

fn correlator(c: &mut Criterion) {
    let atom = neon(60.0, 256);
    let pulse = LaserPulse::new(800.0, 2e14, 1.0, EnvelopeKind::SinSquared, 0.0).unwrap();
    let settings = PropagationSettings {
        dt: 0.14,
        absorber: Some(Absorber::default()),
        store_stride: 5,
    };
    let mut g = c.benchmark_group("correlator");
    g.sample_size(10);
    g.bench_function("one_cycle_256", |b| {
        b.iter(|| two_time_correlation(&atom, &pulse, &settings, 1).unwrap());
    });
    let corr = two_time_correlation(&atom, &pulse, &settings, 1).unwrap();
    g.bench_function("pair_amplitude_fft", |b| {
        b.iter(|| pair_amplitude(black_box(&corr), &PairOptions::default()).unwrap());
    });
    g.finish();
}

fn schmidt(c: &mut Criterion) {
    let n = 256;
    let omegas: Vec<f64> = (0..n).map(|k| 0.5 + k as f64 * 0.005).collect();
    let values: Vec<Complex64> = (0..n * n)
        .map(|k| {
            let (a, b) = (omegas[k / n], omegas[k % n]);
            let stripe = (-((a + b - 1.6) / 0.02).powi(2)).exp();
            Complex64::from_polar(stripe * (-((a - b) / 0.4).powi(2)).exp(), a * b)
        })
        .collect();
    let jsa = JointSpectralAmplitude::from_grid(omegas, values, 0.057).unwrap();
    let mut g = c.benchmark_group("schmidt");
    g.sample_size(10);
    g.bench_function("svd_256", |b| {
        b.iter_batched(
            || jsa.clone(),
            |j| schmidt_decompose(&j, &SchmidtOptions::default()).unwrap(),
            BatchSize::LargeInput,
        );
    });
    g.finish();
}

criterion_group!(benches, propagator_step, correlator, schmidt);
criterion_main!(benches);
