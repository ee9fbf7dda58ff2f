mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use sfpg_core::spectra::{
    cutoff_report, estimate_cutoff, fft_frequencies, hhg_spectrum, pair_amplitude, pair_spectrum_from_amplitude,
    time_frequency_map, windowed_transform, HhgSpectrum, PairOptions, PairSpectrum, SpectraError, SpectrumOptions,
    WindowKind,
};
use sfpg_core::tdse::{AtomModel, CorrelationMatrix, DipoleRecord, EnvelopeKind, LaserPulse, SpatialGrid};
use sfpg_core::units::{ALPHA, C_AU};

fn hann(j: usize, n: usize) -> f64 {
    (PI * j as f64 / (n - 1) as f64).sin().powi(2)
}

fn record(dt: f64, f: impl Fn(f64) -> f64, n: usize) -> DipoleRecord {
    let times: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
    DipoleRecord {
        dipole: times.iter().map(|&t| f(t)).collect(),
        norm_loss: vec![0.0; n],
        times,
    }
}

#[test]
fn hhg_spectrum_matches_direct_sum() {
    let (dt, n, w0) = (0.3, 800, 0.057);
    let rec = record(dt, |t| (0.05 * t).sin() * (1.3 * t).cos() + 0.1 * (2.9 * t).sin(), n);
    let spec = hhg_spectrum(&rec, w0, &SpectrumOptions::default()).unwrap();
    let pref = 2.0 * ALPHA / (3.0 * PI * C_AU * C_AU);
    for k in (0..spec.len()).step_by(37) {
        let w = spec.omegas[k];
        let x: Complex64 = (0..n)
            .map(|j| Complex64::from_polar(dt * hann(j, n) * rec.dipole[j], w * j as f64 * dt))
            .sum();
        let expect = pref * w.powi(3) * x.norm_sqr();
        let scale = pref * w.powi(3) * (rec.dipole.iter().map(|d| d.abs()).sum::<f64>() * dt).powi(2);
        assert!(
            (spec.dp_domega[k] - expect).abs() <= 1e-12 * scale,
            "bin {k}: {} vs {expect}",
            spec.dp_domega[k]
        );
    }
}

#[test]
fn bin_aligned_cosine_has_exact_rectangular_peak() {
    let (dt, n) = (0.25, 256);
    let freqs = fft_frequencies(n, dt);
    let k = 19;
    let rec = record(dt, |t| (freqs[k] * t).cos(), n);
    let f = windowed_transform(&rec.dipole, dt, WindowKind::Rectangular, n);
    assert!((f[k] - Complex64::new(0.5 * n as f64 * dt, 0.0)).norm() < 1e-10);
    for (m, z) in f.iter().enumerate() {
        if m != k && m != n - k {
            assert!(z.norm() < 1e-10, "leak at {m}");
        }
    }
}

#[test]
fn gate_selects_the_late_part_of_the_record() {
    let (dt, n, w0) = (0.2, 4000, 0.057);
    let split = 0.5 * n as f64 * dt;
    let (w1, w2) = (11.0 * w0, 23.0 * w0);
    let rec = record(dt, |t| if t < split { (w1 * t).cos() } else { (w2 * t).cos() }, n);
    let opts = SpectrumOptions {
        gate: Some((split + 10.0, n as f64 * dt)),
        ..Default::default()
    };
    let spec = hhg_spectrum(&rec, w0, &opts).unwrap();
    assert!(spec.peak_near(23.0, 0.3) > 1e6 * spec.peak_near(11.0, 0.3));

    let narrow = SpectrumOptions {
        gate: Some((0.0, 10.0)),
        ..Default::default()
    };
    assert!(matches!(
        hhg_spectrum(&rec, w0, &narrow),
        Err(SpectraError::TooShortRecord { .. })
    ));
}

fn symmetric_corr(n: usize, dt: f64, f: impl Fn(f64, f64) -> Complex64) -> CorrelationMatrix {
    let times: Vec<f64> = (0..n).map(|j| j as f64 * dt).collect();
    let mut values = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = f(times[i], times[j]);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    CorrelationMatrix::from_parts(times, values, true).unwrap()
}

#[test]
fn pair_amplitude_matches_direct_double_sum() {
    let (n, dt) = (24, 0.4);
    let corr = symmetric_corr(n, dt, |t, s| {
        let (a, b) = (t.max(s), t.min(s));
        Complex64::from_polar((-0.05 * (a - b)).exp() * (0.1 * b).cos(), -0.9 * (a - b))
    });
    let amp = pair_amplitude(&corr, &PairOptions::default()).unwrap();
    let pref = 2.0 * ALPHA * ALPHA / (9.0 * PI * PI * C_AU.powi(4));
    let spec = pair_spectrum_from_amplitude(&amp);
    let scale: f64 = corr.values().iter().map(|z| z.norm()).sum::<f64>() * dt * dt;
    for k in [1usize, 4, 9] {
        for l in [2usize, 7, 12] {
            let (w, wp) = (amp.omegas[k], amp.omegas[l]);
            let mut z = Complex64::default();
            for i in 0..n {
                for j in 0..n {
                    let ph = w * i as f64 * dt + wp * j as f64 * dt;
                    z += corr.get(i, j) * Complex64::from_polar(dt * dt * hann(i, n) * hann(j, n), ph);
                }
            }
            assert!((amp.get(k, l) - z).norm() < 1e-12 * scale, "({k},{l})");
            assert!((amp.get(k, l) - amp.get(l, k)).norm() < 1e-14);
            let dp = pref * (w * wp).powi(3) * z.norm_sqr();
            let dp_scale = pref * (w * wp).powi(3) * scale * scale;
            assert!((spec.get(k, l) - dp).abs() <= 1e-10 * dp_scale);
        }
    }
}

#[test]
fn pair_spectrum_needs_connected_correlator() {
    let times: Vec<f64> = (0..8).map(|j| j as f64).collect();
    let corr = CorrelationMatrix::from_parts(times, vec![Complex64::new(1.0, 0.0); 64], false).unwrap();
    assert_eq!(
        pair_amplitude(&corr, &PairOptions::default()),
        Err(SpectraError::NotConnected)
    );
}

#[test]
fn max_omega_trims_the_quadrant() {
    let corr = symmetric_corr(32, 0.5, |t, s| Complex64::new((-(t - s).powi(2)).exp(), 0.0));
    let opts = PairOptions {
        max_omega: Some(2.0),
        ..Default::default()
    };
    let amp = pair_amplitude(&corr, &opts).unwrap();
    assert!(*amp.omegas.last().unwrap() <= 2.0);
    assert_eq!(amp.values.len(), amp.len() * amp.len());
}

/// Model atom whose ionization energy puts the plateau start at order 12.
fn model_atom() -> AtomModel {
    let grid = SpatialGrid::symmetric(20.0, 64).unwrap();
    let (psi, e0) = common::ground_state(&grid, 1.0);
    AtomModel::from_state(grid, 1.0, psi, e0).unwrap()
}

fn synthetic_envelope(h: f64, edge: f64) -> f64 {
    if h <= edge {
        1.0
    } else {
        10f64.powf(-(h - edge))
    }
}

#[test]
fn cutoff_report_finds_synthetic_hhg_edge() {
    let atom = model_atom();
    let pulse = LaserPulse::new(800.0, 2.0e14, 10.0, EnvelopeKind::SinSquared, 0.0).unwrap();
    let w0 = pulse.omega0();
    let dw = w0 / 16.0;
    let omegas: Vec<f64> = (0..16 * 80).map(|k| k as f64 * dw).collect();
    // odd lines only, with a plateau to order 41
    let dp: Vec<f64> = omegas
        .iter()
        .map(|w| {
            let h = w / w0;
            let near_odd = ((h - 1.0) / 2.0 - ((h - 1.0) / 2.0).round()).abs() < 1e-9;
            if near_odd {
                synthetic_envelope(h, 41.0)
            } else {
                1e-12
            }
        })
        .collect();
    let spec = HhgSpectrum {
        omegas,
        dp_domega: dp,
        omega0: w0,
        window: WindowKind::Hann,
    };
    let r = cutoff_report(&spec, &atom, &pulse).unwrap();
    assert!((r.q_c - 41.0).abs() < 1.5, "q_c = {}", r.q_c);
    assert!(r.pair.is_none());
    assert!(r.predicted_q_c > 0.0);
}

#[test]
fn cutoff_report_reads_pair_stripes() {
    let atom = model_atom();
    let pulse = LaserPulse::new(800.0, 2.0e14, 10.0, EnvelopeKind::SinSquared, 0.0).unwrap();
    let w0 = pulse.omega0();
    let dw = w0 / 4.0;
    let n = 4 * 40;
    let omegas: Vec<f64> = (0..n).map(|k| k as f64 * dw).collect();
    let mut dp = vec![1e-14; n * n];
    for i in 0..n {
        for j in 0..n {
            let s = (i + j) as f64 / 4.0;
            if (i + j) % 8 == 0 {
                dp[i * n + j] = synthetic_envelope(s, 40.0);
            }
        }
    }
    let spec = PairSpectrum {
        omegas,
        dp,
        window: WindowKind::Hann,
    };
    let r = cutoff_report(&spec, &atom, &pulse).unwrap();
    assert!((r.q_c - 40.0).abs() < 1.5, "q_c = {}", r.q_c);
    let stats = r.pair.unwrap();
    assert!(stats.primary > 1e3 * stats.between);
    assert!(stats.plateau_stripe_mean > 1e6 * stats.beyond_box_mean);
}

#[test]
fn low_coverage_is_reported() {
    let atom = model_atom();
    let pulse = LaserPulse::new(800.0, 2.0e14, 10.0, EnvelopeKind::SinSquared, 0.0).unwrap();
    let spec = HhgSpectrum {
        omegas: (0..100).map(|k| k as f64 * 0.01).collect(),
        dp_domega: vec![1.0; 100],
        omega0: pulse.omega0(),
        window: WindowKind::Hann,
    };
    assert!(matches!(
        cutoff_report(&spec, &atom, &pulse),
        Err(SpectraError::InsufficientCoverage { .. })
    ));
}

#[test]
fn tf_map_localizes_a_burst() {
    let (n, dt) = (400, 0.5);
    let (tc, w1) = (120.0, 1.1);
    let burst = |t: f64| (-((t - tc) / 8.0).powi(2)).exp() * (w1 * t).cos();
    let corr = symmetric_corr(n, dt, |t, s| Complex64::new(burst(t) * burst(s), 0.0));
    let map = time_frequency_map(&corr, 10.0, 4).unwrap();
    let n_c = map.n_centers();
    let (mut best, mut best_v) = ((0, 0), 0.0);
    for a in 0..n_c {
        for b in 0..n_c {
            let v: f64 = map.slice(a, b).iter().sum();
            if v > best_v {
                best_v = v;
                best = (a, b);
            }
        }
    }
    assert_eq!(best.0, best.1);
    assert!((map.window_centers[best.0] - tc).abs() <= 2.0 + 1e-9);
    let slice = map.slice(best.0, best.0);
    let k = (0..slice.len()).max_by(|&i, &j| slice[i].total_cmp(&slice[j])).unwrap();
    // the (omega omega')^3 weight pulls the maximum somewhat above 2 w1
    assert!(
        (map.sum_omegas[k] / (2.0 * w1) - 1.0).abs() < 0.15,
        "{}",
        map.sum_omegas[k]
    );
    assert!(matches!(
        time_frequency_map(&corr, 1.0, 4),
        Err(SpectraError::WindowTooNarrow { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rectangular_transform_obeys_parseval(
        samples in proptest::collection::vec(-1.0f64..1.0, 4..200),
        dt in 0.01f64..2.0,
        pad in 1usize..4,
    ) {
        let n_fft = samples.len().next_power_of_two() * pad;
        let f = windowed_transform(&samples, dt, WindowKind::Rectangular, n_fft);
        let dw = 2.0 * PI / (n_fft as f64 * dt);
        let lhs: f64 = f.iter().map(|z| z.norm_sqr()).sum::<f64>() * dw / (2.0 * PI);
        let rhs: f64 = samples.iter().map(|x| x * x).sum::<f64>() * dt;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-12));
    }

    #[test]
    fn real_records_give_conjugate_symmetric_transforms(
        samples in proptest::collection::vec(-1.0f64..1.0, 4..128),
    ) {
        let n_fft = samples.len().next_power_of_two();
        let f = windowed_transform(&samples, 0.1, WindowKind::Hann, n_fft);
        for k in 1..n_fft {
            prop_assert!((f[k] - f[n_fft - k].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn knee_estimator_recovers_sharp_edges(
        edge in 15usize..50,
        slope in 0.5f64..3.0,
        level in -5.0f64..5.0,
        start in 2usize..10,
    ) {
        let env: Vec<f64> = (0..edge + 30)
            .map(|h| 10f64.powf(level - if h > edge { slope * (h - edge) as f64 } else { 0.0 }))
            .collect();
        let est = estimate_cutoff(&env, start).unwrap();
        prop_assert!((est.q_c - edge as f64).abs() < 1e-6, "{:?}", est);
        prop_assert!(est.q_drop >= est.q_c);
    }
}
