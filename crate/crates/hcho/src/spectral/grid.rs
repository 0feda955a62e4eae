//! The periodic collocation grid and its wavenumber bookkeeping.

use super::fft::FftEngine;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// Default box length, 2π·8. Larger boxes probe lower frequencies.
pub const DEFAULT_BOX_LENGTH: f64 = 16.0 * std::f64::consts::PI;

/// A cubic periodic grid `[0,L)³` with `n` points per axis.
///
/// Owns the FFT plans and a precomputed `|k|²` table; shared behind `Arc` by
/// every field living on it.
pub struct Grid {
    n: usize,
    box_length: f64,
    k2: Vec<f64>,
    engine: FftEngine,
}

impl Grid {
    pub fn new(box_length: f64, n: usize) -> Result<Arc<Grid>> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "points_per_axis must be even and >= 8, got {n}"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::Config(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        let mut k2 = vec![0.0; n * n * n];
        let base = 2.0 * std::f64::consts::PI / box_length;
        for (idx, slot) in k2.iter_mut().enumerate() {
            let m = mode_of_index(idx, n);
            let kx = base * m[0] as f64;
            let ky = base * m[1] as f64;
            let kz = base * m[2] as f64;
            *slot = kx * kx + ky * ky + kz * kz;
        }
        Ok(Arc::new(Grid {
            n,
            box_length,
            k2,
            engine: FftEngine::new(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of modes (= grid points), n³.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume L³/n³ of the physical quadrature.
    pub fn cell_volume(&self) -> f64 {
        let v = self.box_length.powi(3);
        v / self.len() as f64
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// `|k|²` of the mode stored at flat index `idx`.
    #[inline]
    pub fn k2(&self, idx: usize) -> f64 {
        self.k2[idx]
    }

    pub fn k2_table(&self) -> &[f64] {
        &self.k2
    }

    /// Signed mode triple of flat index `idx`, each component in [-n/2, n/2).
    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 3] {
        mode_of_index(idx, self.n)
    }

    /// Flat index of a signed mode triple (components taken mod n).
    pub fn index_of_mode(&self, m: [i64; 3]) -> usize {
        let n = self.n as i64;
        let wrap = |a: i64| -> usize { (((a % n) + n) % n) as usize };
        (wrap(m[0]) * self.n + wrap(m[1])) * self.n + wrap(m[2])
    }

    /// Flat index of the mode `-m` paired with `idx` by Hermitian symmetry.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let n = self.n;
        let k = idx % n;
        let j = (idx / n) % n;
        let i = idx / (n * n);
        let neg = |a: usize| (n - a) % n;
        (neg(i) * n + neg(j)) * n + neg(k)
    }

    /// True if any component of the mode exceeds n/3 (the 2/3-rule band).
    #[inline]
    pub fn is_aliased(&self, idx: usize) -> bool {
        let cut = (self.n / 3) as i64;
        let m = self.mode(idx);
        m[0].abs() > cut || m[1].abs() > cut || m[2].abs() > cut
    }

    pub(super) fn fft_forward(&self, data: &mut Vec<Complex64>) {
        self.engine.forward(data);
    }

    pub(super) fn fft_inverse(&self, data: &mut Vec<Complex64>) {
        self.engine.inverse(data);
    }

    /// Two grids are compatible when they describe the same box sampling.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.n == other.n && self.box_length.to_bits() == other.box_length.to_bits()
    }
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("box_length", &self.box_length)
            .finish()
    }
}

#[inline]
fn mode_of_index(idx: usize, n: usize) -> [i64; 3] {
    let k = idx % n;
    let j = (idx / n) % n;
    let i = idx / (n * n);
    let signed = |a: usize| -> i64 {
        if a < n / 2 {
            a as i64
        } else {
            a as i64 - n as i64
        }
    };
    [signed(i), signed(j), signed(k)]
}
