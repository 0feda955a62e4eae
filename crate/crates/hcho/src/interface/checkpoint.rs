//! Bit-exact binary checkpoints.
//!
//! Layout (all little-endian):
//!
//! ```text
//!   bytes 0..5    magic "HCHO1"
//!   u32           format version (currently 1)
//!   u32           points per axis n
//!   f64           box length L
//!   f64           time stamp
//!   u64           config hash (FNV-1a of the canonical config text)
//!   n³ × (f64,f64)  u coefficients (re, im) in flat mode order
//!   n³ × (f64,f64)  v coefficients
//! ```

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField, StateVector};
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 5] = b"HCHO1";
pub const FORMAT_VERSION: u32 = 1;

pub fn checkpoint_write(path: &Path, state: &StateVector, config_hash: u64) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let grid = state.grid();
    let mut buf: Vec<u8> = Vec::with_capacity(37 + 32 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.box_length().to_le_bytes());
    buf.extend_from_slice(&state.time.to_le_bytes());
    buf.extend_from_slice(&config_hash.to_le_bytes());
    for field in [&state.u, &state.v] {
        for c in field.coeffs() {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    file.flush()?;
    Ok(())
}

/// Read a checkpoint; when `expected_hash` is given, a mismatch refuses the
/// resume explicitly instead of continuing with inconsistent parameters.
pub fn checkpoint_read(path: &Path, expected_hash: Option<u64>) -> Result<(StateVector, u64)> {
    let mut file = std::fs::File::open(path)?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)?;
    if buf.len() < 37 {
        return Err(Error::Integrity(format!(
            "checkpoint truncated: {} bytes is shorter than the header",
            buf.len()
        )));
    }
    if &buf[0..5] != MAGIC {
        return Err(Error::Integrity("bad checkpoint magic".into()));
    }
    let version = u32::from_le_bytes(buf[5..9].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Integrity(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let n = u32::from_le_bytes(buf[9..13].try_into().unwrap()) as usize;
    let box_length = f64::from_le_bytes(buf[13..21].try_into().unwrap());
    let time = f64::from_le_bytes(buf[21..29].try_into().unwrap());
    let hash = u64::from_le_bytes(buf[29..37].try_into().unwrap());
    if let Some(expect) = expected_hash {
        if expect != hash {
            return Err(Error::Integrity(format!(
                "config hash mismatch: checkpoint {hash:#018x}, current {expect:#018x}; refusing resume"
            )));
        }
    }
    let grid = Grid::new(box_length, n)?;
    let len = grid.len();
    let expected_bytes = 37 + 32 * len;
    if buf.len() != expected_bytes {
        return Err(Error::Integrity(format!(
            "checkpoint length {} does not match {} expected for n = {n}",
            buf.len(),
            expected_bytes
        )));
    }
    let mut read_field = |offset: usize| -> Result<SpectralField> {
        let mut coeffs = Vec::with_capacity(len);
        for i in 0..len {
            let at = offset + 16 * i;
            let re = f64::from_le_bytes(buf[at..at + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[at + 8..at + 16].try_into().unwrap());
            coeffs.push(Complex64::new(re, im));
        }
        SpectralField::from_coeffs(grid.clone(), coeffs)
    };
    let u = read_field(37)?;
    let v = read_field(37 + 16 * len)?;
    Ok((StateVector::new(u, v, time)?, hash))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;

    fn sample_state() -> StateVector {
        let grid = Grid::new(2.0 * std::f64::consts::PI, 8).unwrap();
        let u = SpectralField::from_modes(
            grid.clone(),
            &[([1, 0, 0], Complex64::new(0.25, 0.0)), ([2, 1, 0], Complex64::new(0.1, -0.3))],
        );
        let v = SpectralField::from_modes(grid.clone(), &[([0, 1, 1], Complex64::new(0.0, 0.7))]);
        StateVector::new(u, v, 3.25).unwrap()
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.chk");
        let state = sample_state();
        checkpoint_write(&path, &state, 0xdead_beef).unwrap();
        let (back, hash) = checkpoint_read(&path, Some(0xdead_beef)).unwrap();
        assert_eq!(hash, 0xdead_beef);
        assert_eq!(back.time.to_bits(), state.time.to_bits());
        for (a, b) in back.u.coeffs().iter().zip(state.u.coeffs().iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        for (a, b) in back.v.coeffs().iter().zip(state.v.coeffs().iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn corruption_and_mismatch_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.chk");
        let state = sample_state();
        checkpoint_write(&path, &state, 7).unwrap();

        // wrong expected hash
        assert!(matches!(
            checkpoint_read(&path, Some(8)),
            Err(Error::Integrity(_))
        ));

        // corrupt one magic byte
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[2] ^= 0xff;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            checkpoint_read(&path, None),
            Err(Error::Integrity(_))
        ));

        // truncate a fresh copy
        checkpoint_write(&path, &state, 7).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(
            checkpoint_read(&path, None),
            Err(Error::Integrity(_))
        ));
    }
}
