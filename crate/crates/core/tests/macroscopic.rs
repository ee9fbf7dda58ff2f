use proptest::prelude::*;
use sfpg_core::macroscopic::{
    angular_yield, comb_edge, emission_angle, emission_angle_with, emission_cosine, hhg_mismatch,
    hhg_suppression_ratio, ionization_for_degenerate_angle, phase_mismatch, DispersionModel, GasSpecies,
    IndexConvention, InteractionGeometry, MacroError, YieldOptions,
};
use sfpg_core::spectra::{PairSpectrum, WindowKind};
use sfpg_core::units::{self, C_AU};

fn omega0() -> f64 {
    units::wavelength_nm_to_omega(800.0)
}

fn capillary(pressure: f64, eta: f64) -> (DispersionModel, InteractionGeometry) {
    let radius = units::metres_to_bohr(400e-6);
    let model = DispersionModel::new(GasSpecies::Ne, pressure, eta, radius, 293.0).unwrap();
    let geom = InteractionGeometry::new(1.0, 400.0, &model, 1e17).unwrap();
    (model, geom)
}

/// Pair spectrum with unit weight on exact even-sum bins, both photons at or
/// above `2 omega0`, on a grid of `bins` points per `omega0`.
fn stripe_spectrum(bins: usize, top: usize, keep: impl Fn(usize) -> bool) -> PairSpectrum {
    let w0 = omega0();
    let dw = w0 / bins as f64;
    let n = bins * top;
    let mut dp = vec![0.0; n * n];
    for i in 2 * bins..n {
        for j in 2 * bins..n {
            let s = i + j;
            if s % (2 * bins) == 0 && keep(s / bins) {
                dp[i * n + j] = 1.0;
            }
        }
    }
    PairSpectrum {
        omegas: (0..n).map(|k| k as f64 * dw).collect(),
        dp,
        window: WindowKind::Hann,
    }
}

fn options(thetas: Vec<f64>, convention: IndexConvention, orders: Option<Vec<u32>>) -> YieldOptions {
    YieldOptions {
        omega0: omega0(),
        thetas,
        band: None,
        calibration: 1.0,
        convention,
        orders,
    }
}

#[test]
fn equal_indices_put_the_degenerate_pair_on_axis() {
    for n in [1.0, 1.0 - 3e-4, 1.0 + 2e-5] {
        for q in [2.0, 20.0, 64.0] {
            let c = emission_cosine(q, 0.5 * q, 1.0, n, n);
            assert_eq!(c, 1.0);
            assert_eq!(emission_angle_with(q, 0.5 * q, 1.0, n, n).unwrap(), 0.0);
        }
    }
}

#[test]
fn degenerate_cosine_is_the_index_ratio() {
    let (model, _) = capillary(1.0, 0.2);
    let w0 = omega0();
    for q in (10..=40).step_by(2) {
        let w = 0.5 * q as f64 * w0;
        let th = emission_angle(q, w, w0, &model).unwrap();
        let ratio = model.pump_index(w0) / model.emitted_index(w);
        assert!((th.cos() - ratio).abs() < 1e-12, "q = {q}");
    }
}

#[test]
fn fast_emitted_light_has_no_degenerate_angle() {
    // without plasma the neutral gas slows the pump below the XUV pair
    let (model, _) = capillary(1.0, 0.0);
    let w0 = omega0();
    assert!(model.pump_index(w0) > model.emitted_index(10.0 * w0));
    let r = emission_angle(20, 10.0 * w0, w0, &model);
    assert!(matches!(r, Err(MacroError::NoSolution { .. })), "{r:?}");
}

#[test]
fn odd_or_out_of_range_orders_are_rejected() {
    let (model, _) = capillary(1.0, 0.2);
    let w0 = omega0();
    assert!(matches!(
        emission_angle(21, 10.0 * w0, w0, &model),
        Err(MacroError::DomainError(_))
    ));
    assert!(matches!(
        emission_angle(20, 21.0 * w0, w0, &model),
        Err(MacroError::DomainError(_))
    ));
    assert!(matches!(
        emission_angle(20, 0.0, w0, &model),
        Err(MacroError::DomainError(_))
    ));
}

#[test]
fn collinear_mismatch_is_the_index_difference() {
    let (model, _) = capillary(1.0, 0.2);
    let w0 = omega0();
    let (q, w) = (20.0, 7.0 * w0);
    let m = phase_mismatch(q, w, w0, 0.0, Some(0.0), &model, IndexConvention::Shared)
        .unwrap()
        .unwrap();
    let expect = q * w0 * (model.pump_index(w0) - model.emitted_index(w)) / C_AU;
    assert!((m.dk_z - expect).abs() <= 1e-12 * expect.abs());
    assert_eq!(m.dk_perp, 0.0);
    // harmonic of order omega / omega0 against the pump
    let w = 21.0 * w0;
    let h = hhg_mismatch(&model, w, w0);
    let expect = w * (model.pump_index(w0) - model.emitted_index(w)) / C_AU;
    assert!((h - expect).abs() <= 1e-12 * expect.abs());
}

#[test]
fn mismatch_zero_crossings_reproduce_emission_angles() {
    let (model, _) = capillary(1.0, 0.2);
    let w0 = omega0();
    let theta = 0.06;
    for q in [16u32, 24, 32] {
        let dk = |w: f64| {
            phase_mismatch(q as f64, w, w0, theta, None, &model, IndexConvention::Shared)
                .unwrap()
                .unwrap()
                .dk_z
        };
        // scan the lower half of the stripe for sign changes
        let n = 400;
        let ws: Vec<f64> = (1..n).map(|k| 0.5 * q as f64 * w0 * k as f64 / n as f64).collect();
        let mut roots = Vec::new();
        for pair in ws.windows(2) {
            let (mut a, mut b) = (pair[0], pair[1]);
            if dk(a).signum() == dk(b).signum() {
                continue;
            }
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if dk(m).signum() == dk(a).signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        assert!(!roots.is_empty(), "q = {q}");
        for w in roots {
            let th = emission_angle(q, w, w0, &model).unwrap();
            assert!((th - theta).abs() < 1e-7, "q = {q}: {th} vs {theta}");
        }
    }
}

#[test]
fn capillary_angles_are_a_few_degrees() {
    let (model, _) = capillary(1.0, 0.2);
    let w0 = omega0();
    for q in (10..=40).step_by(2) {
        for frac in [0.3, 0.4, 0.5] {
            if let Ok(th) = emission_angle(q, frac * q as f64 * w0, w0, &model) {
                assert!((1e-3..=0.3).contains(&th), "q = {q}, frac = {frac}: {th}");
            }
        }
        let deg = emission_angle(q, 0.5 * q as f64 * w0, w0, &model).unwrap();
        assert!((0.045..0.06).contains(&deg), "q = {q}: {deg}");
    }
}

#[test]
fn ionization_inversion_round_trips() {
    let (model, _) = capillary(1.0, 0.2);
    let w0 = omega0();
    let theta = emission_angle(20, 10.0 * w0, w0, &model).unwrap();
    let eta = ionization_for_degenerate_angle(&model, 20, w0, theta).unwrap();
    assert!((eta - 0.2).abs() < 1e-9, "{eta}");
}

#[test]
fn hhg_background_is_suppressed_at_the_operating_point() {
    let (model, geom) = capillary(1.0, 0.2);
    let w0 = omega0();
    // the degenerate order-20 pair is phase matched in this configuration
    assert!(emission_angle(20, 10.0 * w0, w0, &model).is_ok());
    for h in (19..=45).step_by(2) {
        let r = hhg_suppression_ratio(&model, &geom, h as f64 * w0, w0);
        assert!(r <= 1e-4, "harmonic {h}: {r:.3e}");
    }
    let free = DispersionModel {
        pressure_atm: 0.0,
        ionization_fraction: 0.0,
        mode_constant: 0.0,
        ..model
    };
    assert!((hhg_suppression_ratio(&free, &geom, 21.0 * w0, w0) - 1.0).abs() < 1e-15);
}

#[test]
fn geometry_and_band_are_validated() {
    let (model, geom) = capillary(1.0, 0.2);
    let spec = stripe_spectrum(4, 30, |_| true);
    let other = InteractionGeometry {
        density: 2.0 * geom.density,
        ..geom
    };
    let opts = options(vec![0.0, 0.01], IndexConvention::Shared, None);
    assert_eq!(
        angular_yield(&spec, &other, &model, &opts).unwrap_err(),
        MacroError::GeometryMismatch
    );
    let wide = YieldOptions {
        band: Some((omega0(), 40.0 * omega0())),
        ..opts
    };
    assert!(matches!(
        angular_yield(&spec, &geom, &model, &wide),
        Err(MacroError::BandMismatch { .. })
    ));
}

#[test]
fn unit_coherence_recovers_the_frequency_marginal() {
    let (model, geom) = capillary(1.0, 0.2);
    // a vanishing medium length makes every sinc factor one
    let tiny = InteractionGeometry { length: 1e-9, ..geom };
    let spec = stripe_spectrum(4, 30, |_| true);
    let thetas = vec![0.0, 0.002, 0.01];
    let map = angular_yield(&spec, &tiny, &model, &options(thetas, IndexConvention::PerPhoton, None)).unwrap();
    let scale = tiny.atom_number().powi(2);
    let dw = spec.bin_width();
    let n = spec.len();
    for (r, &w) in map.omegas.iter().enumerate() {
        let i = spec.omegas.iter().position(|x| *x == w).unwrap();
        let marginal: f64 = (0..n).map(|j| spec.get(i, j)).sum::<f64>() * dw;
        for j in 0..map.thetas.len() {
            let v = map.get(r, j) / scale;
            assert!((v - marginal).abs() <= 1e-9 * marginal.max(1e-300), "row {r}, col {j}");
        }
    }
}

#[test]
fn stripe_partners_conserve_energy() {
    let (model, geom) = capillary(1.0, 0.2);
    let spec = stripe_spectrum(4, 30, |_| true);
    let map = angular_yield(
        &spec,
        &geom,
        &model,
        &options(vec![0.05], IndexConvention::PerPhoton, None),
    )
    .unwrap();
    let w0 = omega0();
    let dw = spec.bin_width();
    for s in &map.stripes {
        for (r, &w) in map.omegas.iter().enumerate() {
            if s.strength[r] > 0.0 {
                let err = (w + s.partner_centroid[r] - s.q as f64 * w0).abs();
                assert!(err < dw, "q = {}, omega = {w}", s.q);
            }
        }
    }
}

#[test]
fn fixed_frequency_slice_shows_one_ring_per_order() {
    let (model, geom) = capillary(1.0, 0.2);
    let w0 = omega0();
    let spec = stripe_spectrum(8, 48, |_| true);
    let thetas = YieldOptions::uniform_thetas(0.15, 3001);
    let step = thetas[1];
    let map = angular_yield(&spec, &geom, &model, &options(thetas, IndexConvention::Shared, None)).unwrap();
    let r = map.omegas.iter().position(|w| (w / w0 - 15.0).abs() < 1e-9).unwrap();
    let w = map.omegas[r];
    let row = map.omega_slice(r);
    let peak = row.iter().cloned().fold(0.0, f64::max);
    let maxima: Vec<f64> = (1..row.len() - 1)
        .filter(|&j| row[j] > row[j - 1] && row[j] >= row[j + 1] && row[j] > 0.5 * peak)
        .map(|j| map.thetas[j])
        .collect();
    // partners must stay inside the synthetic support [2, 48) omega0
    let expected: Vec<f64> = (18..=62)
        .step_by(2)
        .filter_map(|q| emission_angle(q, w, w0, &model).ok())
        .filter(|th| *th < 0.15 - 2e-3)
        .collect();
    assert!(expected.len() >= 3, "{expected:?}");
    assert_eq!(maxima.len(), expected.len(), "{maxima:?} vs {expected:?}");
    for (a, b) in maxima.iter().zip(&expected) {
        assert!((a - b).abs() <= step, "{a} vs {b}");
    }
}

#[test]
fn doubling_pressure_at_phase_matching_quadruples_the_yield() {
    let w0 = omega0();
    let spec = stripe_spectrum(4, 30, |q| q == 20);
    let w = 9.0 * w0;
    let at = |p: f64| {
        let (model, geom) = capillary(p, 0.2);
        let th = emission_angle(20, w, w0, &model).unwrap();
        let opts = YieldOptions {
            band: Some((w - 0.01 * w0, w + 0.01 * w0)),
            ..options(vec![th], IndexConvention::Shared, Some(vec![20]))
        };
        let map = angular_yield(&spec, &geom, &model, &opts).unwrap();
        assert_eq!(map.omegas.len(), 1);
        map.get(0, 0)
    };
    let ratio = at(2.0) / at(1.0);
    assert!((ratio - 4.0).abs() < 1e-9, "{ratio}");
}

#[test]
fn comb_edge_finds_the_last_efficient_harmonic() {
    let comb: Vec<(usize, f64)> = (1..40)
        .map(|h| {
            (
                h,
                if h <= 20 {
                    1.0 + 0.2 * (h % 3) as f64
                } else {
                    10f64.powi(-(h as i32 - 20))
                },
            )
        })
        .collect();
    assert_eq!(comb_edge(&comb, (5, 15), 1.0), Some(20));
    assert_eq!(comb_edge(&comb, (50, 60), 1.0), None);
}

#[test]
fn yield_map_is_nonnegative_and_finite() {
    let (model, geom) = capillary(1.0, 0.2);
    let spec = stripe_spectrum(4, 30, |_| true);
    let map = angular_yield(
        &spec,
        &geom,
        &model,
        &options(
            YieldOptions::uniform_thetas(0.15, 151),
            IndexConvention::PerPhoton,
            None,
        ),
    )
    .unwrap();
    assert!(map.dn.iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!(map.total_counts() > 0.0);
    let per_h: f64 = map.counts_per_harmonic().iter().map(|x| x.1).sum();
    assert!((per_h - map.total_counts()).abs() <= 1e-9 * map.total_counts());
    let stripes: f64 = map.stripes.iter().map(|s| s.counts).sum();
    assert!((stripes - map.total_counts()).abs() <= 1e-9 * map.total_counts());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn closed_form_angle_zeroes_the_mismatch(
        half_q in 1u32..40,
        frac in 0.05f64..0.95,
        dn in -3e-4f64..3e-4,
        dn0 in -3e-3f64..0.0,
    ) {
        let q = 2.0 * half_q as f64;
        let (w0, n, n0) = (0.057, 1.0 + dn, 1.0 + dn0);
        let w = frac * q * w0;
        if let Ok(th) = emission_angle_with(q, w, w0, n, n0) {
            let k0 = n0 * w0 / C_AU;
            let (k, kp) = (n * w / C_AU, n * (q * w0 - w) / C_AU);
            let s = k * th.sin() / kp;
            prop_assume!(s.abs() <= 1.0);
            let thp = -s.asin();
            let dz = q * k0 - k * th.cos() - kp * thp.cos();
            prop_assert!(dz.abs() <= 1e-12 * q * k0, "{}", dz / (q * k0));
        }
    }

    #[test]
    fn mismatch_of_the_library_matches_its_angle(
        half_q in 5u32..25,
        frac in 0.1f64..0.9,
        eta in 0.1f64..0.5,
    ) {
        let (model, _) = capillary(1.0, eta);
        let w0 = omega0();
        let q = 2 * half_q;
        let w = frac * q as f64 * w0;
        if let Ok(th) = emission_angle(q, w, w0, &model) {
            let m = phase_mismatch(q as f64, w, w0, th, None, &model, IndexConvention::Shared)
                .unwrap()
                .unwrap();
            let scale = q as f64 * model.pump_index(w0) * w0 / C_AU;
            prop_assert!(m.dk_z.abs() <= 1e-12 * scale);
            prop_assert!(m.dk_perp.abs() <= 1e-12 * scale);
        }
    }
}
