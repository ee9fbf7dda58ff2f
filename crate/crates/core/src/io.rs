//! On-disk formats: binary caches for complex grids and flat CSV exports.
//!
//! Every binary file starts with a fixed header: 8-byte magic, format
//! version (u32), grid length `n` (u64), axis spacing (f64) and a 32-byte
//! parameter hash. Version 1 follows it with a flags word (u32; bit 0 marks a
//! connected correlator, bit 1 a Hann window), the axis origin (f64) and an
//! auxiliary scalar (f64; the drive frequency for spectral grids), then
//! `n * n` row-major complex values as real/imaginary doubles. All integers and floats are
//! little-endian. A `<file>.sha256` sidecar holds the hex digest of the
//! whole file.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::macroscopic::AngularYieldMap;
use crate::quantum_state::JointSpectralAmplitude;
use crate::spectra::{HhgSpectrum, PairAmplitude, PairSpectrum, WindowKind};
use crate::tdse::{CorrelationMatrix, DipoleRecord};
use crate::units::HARTREE_EV;

pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 8 + 4 + 8 + 8 + 32;
const PREAMBLE_LEN: usize = 4 + 8 + 8;
const FLAG_HANN: u32 = 2;
const FLAG_CONNECTED: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Correlation,
    PairAmplitude,
    Jsa,
}

impl GridKind {
    pub fn magic(&self) -> &'static [u8; 8] {
        match self {
            Self::Correlation => b"SFPGCORR",
            Self::PairAmplitude => b"SFPGPAIR",
            Self::Jsa => b"SFPGJSA0",
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("unexpected magic {found:?}, expected {expected:?}")]
    BadMagic { found: String, expected: String },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("file length {found} does not match header ({expected})")]
    Truncated { found: usize, expected: usize },
    #[error("parameter hash differs from the expected one")]
    HashMismatch,
    #[error("checksum sidecar missing or different")]
    ChecksumMismatch,
    #[error("invalid payload: {0}")]
    Invalid(String),
}

/// Decoded binary grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    pub kind: GridKind,
    pub n: usize,
    pub spacing: f64,
    pub origin: f64,
    pub flags: u32,
    pub aux: f64,
    pub param_hash: [u8; 32],
    pub values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.origin + k as f64 * self.spacing).collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String, IoError> {
    let mut f = BufReader::new(File::open(path)?);
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sha256");
    PathBuf::from(s)
}

pub fn encode_grid(grid: &ComplexGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + PREAMBLE_LEN + 16 * grid.values.len());
    out.extend_from_slice(grid.kind.magic());
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.n as u64).to_le_bytes());
    out.extend_from_slice(&grid.spacing.to_le_bytes());
    out.extend_from_slice(&grid.param_hash);
    out.extend_from_slice(&grid.flags.to_le_bytes());
    out.extend_from_slice(&grid.origin.to_le_bytes());
    out.extend_from_slice(&grid.aux.to_le_bytes());
    for z in &grid.values {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn take<const N: usize>(bytes: &[u8], at: &mut usize) -> [u8; N] {
    let mut a = [0u8; N];
    a.copy_from_slice(&bytes[*at..*at + N]);
    *at += N;
    a
}

pub fn decode_grid(bytes: &[u8], kind: GridKind) -> Result<ComplexGrid, IoError> {
    if bytes.len() < HEADER_LEN + PREAMBLE_LEN {
        return Err(IoError::Truncated {
            found: bytes.len(),
            expected: HEADER_LEN + PREAMBLE_LEN,
        });
    }
    let mut at = 0;
    let magic: [u8; 8] = take(bytes, &mut at);
    if &magic != kind.magic() {
        return Err(IoError::BadMagic {
            found: String::from_utf8_lossy(&magic).into_owned(),
            expected: String::from_utf8_lossy(kind.magic()).into_owned(),
        });
    }
    let version = u32::from_le_bytes(take(bytes, &mut at));
    if version != FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let n = u64::from_le_bytes(take(bytes, &mut at)) as usize;
    let spacing = f64::from_le_bytes(take(bytes, &mut at));
    let param_hash: [u8; 32] = take(bytes, &mut at);
    let flags = u32::from_le_bytes(take(bytes, &mut at));
    let origin = f64::from_le_bytes(take(bytes, &mut at));
    let aux = f64::from_le_bytes(take(bytes, &mut at));
    let expected = n
        .checked_mul(n)
        .and_then(|m| m.checked_mul(16))
        .and_then(|m| m.checked_add(HEADER_LEN + PREAMBLE_LEN));
    if expected != Some(bytes.len()) {
        return Err(IoError::Truncated {
            found: bytes.len(),
            expected: expected.unwrap_or(usize::MAX),
        });
    }
    let values = bytes[at..]
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Ok(ComplexGrid {
        kind,
        n,
        spacing,
        origin,
        flags,
        aux,
        param_hash,
        values,
    })
}

/// Write a grid and its checksum sidecar. The data file goes through a
/// temporary name so readers never see a partial file.
pub fn write_grid(path: &Path, grid: &ComplexGrid) -> Result<String, IoError> {
    let bytes = encode_grid(grid);
    let digest = sha256_hex(&bytes);
    let tmp = path.with_extension("partial");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    fs::write(sidecar_path(path), format!("{digest}\n"))?;
    Ok(digest)
}

/// Read a grid, checking the sidecar checksum and, when given, the
/// parameter hash.
pub fn read_grid(path: &Path, kind: GridKind, expected_hash: Option<&[u8; 32]>) -> Result<ComplexGrid, IoError> {
    let bytes = fs::read(path)?;
    let recorded = fs::read_to_string(sidecar_path(path)).map_err(|_| IoError::ChecksumMismatch)?;
    if recorded.trim() != sha256_hex(&bytes) {
        return Err(IoError::ChecksumMismatch);
    }
    let grid = decode_grid(&bytes, kind)?;
    if let Some(h) = expected_hash {
        if &grid.param_hash != h {
            return Err(IoError::HashMismatch);
        }
    }
    Ok(grid)
}

pub fn correlation_to_grid(corr: &CorrelationMatrix, param_hash: [u8; 32]) -> ComplexGrid {
    ComplexGrid {
        kind: GridKind::Correlation,
        n: corr.len(),
        spacing: corr.spacing(),
        origin: corr.times().first().copied().unwrap_or(0.0),
        flags: if corr.is_connected() { FLAG_CONNECTED } else { 0 },
        aux: 0.0,
        param_hash,
        values: corr.values().to_vec(),
    }
}

pub fn grid_to_correlation(grid: ComplexGrid) -> Result<CorrelationMatrix, IoError> {
    let times = grid.axis();
    CorrelationMatrix::from_parts(times, grid.values, grid.flags & FLAG_CONNECTED != 0)
        .map_err(|e| IoError::Invalid(e.to_string()))
}

pub fn write_correlation(path: &Path, corr: &CorrelationMatrix, param_hash: [u8; 32]) -> Result<String, IoError> {
    write_grid(path, &correlation_to_grid(corr, param_hash))
}

pub fn read_correlation(path: &Path, expected_hash: Option<&[u8; 32]>) -> Result<CorrelationMatrix, IoError> {
    grid_to_correlation(read_grid(path, GridKind::Correlation, expected_hash)?)
}

pub fn write_pair_amplitude(path: &Path, amp: &PairAmplitude, param_hash: [u8; 32]) -> Result<String, IoError> {
    write_grid(
        path,
        &ComplexGrid {
            kind: GridKind::PairAmplitude,
            n: amp.len(),
            spacing: amp.bin_width(),
            origin: amp.omegas[0],
            flags: window_flag(amp.window),
            aux: 0.0,
            param_hash,
            values: amp.values.clone(),
        },
    )
}

pub fn read_pair_amplitude(path: &Path, expected_hash: Option<&[u8; 32]>) -> Result<PairAmplitude, IoError> {
    let g = read_grid(path, GridKind::PairAmplitude, expected_hash)?;
    Ok(PairAmplitude {
        omegas: g.axis(),
        window: if g.flags & FLAG_HANN != 0 {
            WindowKind::Hann
        } else {
            WindowKind::Rectangular
        },
        values: g.values,
    })
}

fn window_flag(w: WindowKind) -> u32 {
    match w {
        WindowKind::Hann => FLAG_HANN,
        WindowKind::Rectangular => 0,
    }
}

pub fn write_jsa(path: &Path, jsa: &JointSpectralAmplitude, param_hash: [u8; 32]) -> Result<String, IoError> {
    write_grid(
        path,
        &ComplexGrid {
            kind: GridKind::Jsa,
            n: jsa.len(),
            spacing: jsa.bin_width(),
            origin: jsa.omegas[0],
            flags: 0,
            aux: jsa.omega0,
            param_hash,
            values: jsa.values.clone(),
        },
    )
}

pub fn read_jsa(path: &Path) -> Result<JointSpectralAmplitude, IoError> {
    let g = read_grid(path, GridKind::Jsa, None)?;
    JointSpectralAmplitude::from_grid(g.axis(), g.values, g.aux).map_err(|e| IoError::Invalid(e.to_string()))
}

/// Streaming CSV writer with a fixed header.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, IoError> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    /// Floats are written with `{:e}` formatting, which round-trips exactly.
    pub fn row(&mut self, values: &[f64]) -> Result<(), IoError> {
        debug_assert_eq!(values.len(), self.columns);
        let line: Vec<String> = values.iter().map(|v| format!("{v:e}")).collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), IoError> {
        self.out.flush()?;
        Ok(())
    }
}

pub const DIPOLE_HEADER: [&str; 3] = ["t_au", "dipole_au", "norm_loss"];
pub const SPECTRUM_HEADER: [&str; 4] = ["omega_au", "harmonic", "eV", "value"];
pub const PAIR_HEADER: [&str; 3] = ["omega_au", "omega_prime_au", "value"];
pub const YIELD_HEADER: [&str; 4] = ["omega_eV", "theta_mrad", "q", "dN"];

pub fn write_dipole_csv(path: &Path, rec: &DipoleRecord) -> Result<(), IoError> {
    let mut w = CsvWriter::create(path, &DIPOLE_HEADER)?;
    for i in 0..rec.len() {
        w.row(&[rec.times[i], rec.dipole[i], rec.norm_loss[i]])?;
    }
    w.finish()
}

pub fn write_spectrum_csv(path: &Path, omegas: &[f64], values: &[f64], omega0: f64) -> Result<(), IoError> {
    let mut w = CsvWriter::create(path, &SPECTRUM_HEADER)?;
    for (o, v) in omegas.iter().zip(values) {
        w.row(&[*o, o / omega0, o * HARTREE_EV, *v])?;
    }
    w.finish()
}

pub fn write_hhg_csv(path: &Path, spec: &HhgSpectrum) -> Result<(), IoError> {
    write_spectrum_csv(path, &spec.omegas, &spec.dp_domega, spec.omega0)
}

pub fn write_pair_csv(path: &Path, spec: &PairSpectrum) -> Result<(), IoError> {
    let mut w = CsvWriter::create(path, &PAIR_HEADER)?;
    for (i, a) in spec.omegas.iter().enumerate() {
        for (j, b) in spec.omegas.iter().enumerate() {
            w.row(&[*a, *b, spec.get(i, j)])?;
        }
    }
    w.finish()
}

pub fn write_yield_csv(path: &Path, map: &AngularYieldMap) -> Result<(), IoError> {
    let mut w = CsvWriter::create(path, &YIELD_HEADER)?;
    let nt = map.thetas.len();
    for (i, o) in map.omegas.iter().enumerate() {
        for (j, t) in map.thetas.iter().enumerate() {
            let k = i * nt + j;
            w.row(&[o * HARTREE_EV, t * 1e3, map.dominant_q[k] as f64, map.dn[k]])?;
        }
    }
    w.finish()
}

/// Parse a numeric CSV written by [`CsvWriter`], returning header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), IoError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| IoError::Invalid("empty csv".into()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|f| f.parse::<f64>().map_err(|e| IoError::Invalid(format!("{f}: {e}"))))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((header, rows))
}
