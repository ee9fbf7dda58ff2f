use std::fs;

use num_complex::Complex64;
use proptest::prelude::*;
use sfpg_core::io::{
    decode_grid, encode_grid, read_correlation, read_csv, read_grid, read_jsa, read_pair_amplitude, sha256_hex,
    sidecar_path, write_correlation, write_dipole_csv, write_jsa, write_pair_amplitude, write_pair_csv, ComplexGrid,
    GridKind, IoError, DIPOLE_HEADER, PAIR_HEADER,
};
use sfpg_core::quantum_state::JointSpectralAmplitude;
use sfpg_core::spectra::{pair_spectrum_from_amplitude, PairAmplitude, WindowKind};
use sfpg_core::tdse::{CorrelationMatrix, DipoleRecord};

fn sample_corr(n: usize) -> CorrelationMatrix {
    let times: Vec<f64> = (0..n).map(|k| 0.7 * k as f64).collect();
    let mut v = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let z = Complex64::new(
                (i as f64 * 0.3).sin() / (1.0 + j as f64),
                (0.1 * (i + 2 * j) as f64).cos(),
            );
            v[i * n + j] = z;
            v[j * n + i] = z;
        }
    }
    CorrelationMatrix::from_parts(times, v, true).unwrap()
}

#[test]
fn correlation_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corr.bin");
    let corr = sample_corr(17);
    let digest = write_correlation(&path, &corr, [3; 32]).unwrap();
    assert_eq!(digest, sha256_hex(&fs::read(&path).unwrap()));
    assert_eq!(fs::read_to_string(sidecar_path(&path)).unwrap().trim(), digest);
    let back = read_correlation(&path, Some(&[3; 32])).unwrap();
    assert_eq!(back, corr);
    let bytes = fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"SFPGCORR");
}

#[test]
fn pair_amplitude_and_jsa_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let n = 9;
    let omegas: Vec<f64> = (0..n).map(|k| 0.05 * k as f64).collect();
    let values: Vec<Complex64> = (0..n * n)
        .map(|k| Complex64::new(k as f64, -(k as f64).sqrt()))
        .collect();
    let amp = PairAmplitude {
        omegas: omegas.clone(),
        values: values.clone(),
        window: WindowKind::Hann,
    };
    let p = dir.path().join("amp.bin");
    write_pair_amplitude(&p, &amp, [1; 32]).unwrap();
    assert_eq!(read_pair_amplitude(&p, None).unwrap(), amp);

    let jsa_axis: Vec<f64> = (0..n).map(|k| 0.5 + 0.05 * k as f64).collect();
    let jsa = JointSpectralAmplitude::from_grid(jsa_axis, values, 0.057).unwrap();
    let p = dir.path().join("jsa.bin");
    write_jsa(&p, &jsa, [2; 32]).unwrap();
    let back = read_jsa(&p).unwrap();
    assert_eq!(back.omega0, jsa.omega0);
    for (a, b) in back.values.iter().zip(&jsa.values) {
        assert!((a - b).norm() < 1e-15);
    }
    for (a, b) in back.omegas.iter().zip(&jsa.omegas) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn flipped_byte_fails_the_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corr.bin");
    write_correlation(&path, &sample_corr(8), [0; 32]).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    let k = bytes.len() - 5;
    bytes[k] ^= 0x40;
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_correlation(&path, None), Err(IoError::ChecksumMismatch)));
}

#[test]
fn missing_sidecar_fails_the_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corr.bin");
    write_correlation(&path, &sample_corr(8), [0; 32]).unwrap();
    fs::remove_file(sidecar_path(&path)).unwrap();
    assert!(matches!(read_correlation(&path, None), Err(IoError::ChecksumMismatch)));
}

#[test]
fn wrong_parameters_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corr.bin");
    write_correlation(&path, &sample_corr(8), [5; 32]).unwrap();
    assert!(matches!(
        read_correlation(&path, Some(&[6; 32])),
        Err(IoError::HashMismatch)
    ));
    assert!(matches!(
        read_grid(&path, GridKind::Jsa, None),
        Err(IoError::BadMagic { .. })
    ));
}

#[test]
fn length_and_version_are_validated() {
    let g = ComplexGrid {
        kind: GridKind::Correlation,
        n: 3,
        spacing: 1.0,
        origin: 0.0,
        flags: 0,
        aux: 0.0,
        param_hash: [0; 32],
        values: vec![Complex64::default(); 9],
    };
    let bytes = encode_grid(&g);
    assert!(matches!(
        decode_grid(&bytes[..bytes.len() - 16], GridKind::Correlation),
        Err(IoError::Truncated { .. })
    ));
    assert!(matches!(
        decode_grid(&bytes[..10], GridKind::Correlation),
        Err(IoError::Truncated { .. })
    ));
    let mut v2 = bytes.clone();
    v2[8..12].copy_from_slice(&2u32.to_le_bytes());
    assert!(matches!(
        decode_grid(&v2, GridKind::Correlation),
        Err(IoError::UnsupportedVersion(2))
    ));
}

#[test]
fn csv_exports_have_fixed_headers() {
    let dir = tempfile::tempdir().unwrap();
    let rec = DipoleRecord {
        times: vec![0.0, 0.5, 1.0],
        dipole: vec![0.0, 1.25e-3, -2.5e-7],
        norm_loss: vec![0.0, 0.0, 1e-9],
    };
    let p = dir.path().join("dipole.csv");
    write_dipole_csv(&p, &rec).unwrap();
    let (header, rows) = read_csv(&p).unwrap();
    assert_eq!(header, DIPOLE_HEADER);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1], vec![0.5, 1.25e-3, 0.0]);
    assert_eq!(rows[2][1], -2.5e-7);

    let amp = PairAmplitude {
        omegas: vec![0.0, 0.1, 0.2],
        values: vec![Complex64::new(1.0, 0.0); 9],
        window: WindowKind::Hann,
    };
    let p = dir.path().join("pair.csv");
    write_pair_csv(&p, &pair_spectrum_from_amplitude(&amp)).unwrap();
    let (header, rows) = read_csv(&p).unwrap();
    assert_eq!(header, PAIR_HEADER);
    assert_eq!(rows.len(), 9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_round_trips(
        n in 1usize..12,
        spacing in 1e-6f64..10.0,
        origin in -5.0f64..5.0,
        flags in 0u32..4,
        hash in proptest::array::uniform32(any::<u8>()),
        seed in any::<u64>(),
    ) {
        let values: Vec<Complex64> = (0..n * n)
            .map(|k| {
                let x = (seed.wrapping_mul(6364136223846793005).wrapping_add(k as u64) >> 11) as f64;
                Complex64::new(x.sin(), x.cos() * 1e-300)
            })
            .collect();
        let g = ComplexGrid { kind: GridKind::PairAmplitude, n, spacing, origin, flags, aux: 0.25, param_hash: hash, values };
        let back = decode_grid(&encode_grid(&g), GridKind::PairAmplitude).unwrap();
        prop_assert_eq!(back, g);
    }
}
