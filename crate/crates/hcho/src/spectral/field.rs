//! Real physical fields and their complex Fourier coefficients.

use super::grid::Grid;
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::Arc;

/// Relative imaginary residue above which an inverse transform is rejected.
const IM_RESIDUE_TOL: f64 = 1e-10;

/// Real samples on the grid points `x_j = L·j/n`.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} samples but grid holds {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(PhysicalField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        PhysicalField {
            grid,
            values: vec![0.0; len],
        }
    }

    /// Sample a scalar function of position over the grid.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let n = grid.n();
        let h = grid.box_length() / n as f64;
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    values.push(f(i as f64 * h, j as f64 * h, k as f64 * h));
                }
            }
        }
        PhysicalField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Midpoint quadrature of the samples over the box: (L³/n³)·Σ f(x_j).
    pub fn quadrature(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

/// Complex Fourier coefficients of a scalar field on a periodic box.
///
/// Fields produced from real samples satisfy the Hermitian symmetry
/// `coeff(-m) = conj(coeff(m))`; the Schrödinger propagator also runs on
/// genuinely complex fields, where that symmetry is absent and only the raw
/// complex inverse transform is meaningful.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
    mean_zero: bool,
}

/// `coeff(m) = (1/n³)·Σ_j field(x_j)·exp(-i k·x_j)`.
pub fn forward_transform(field: &PhysicalField) -> SpectralField {
    let mut data: Vec<Complex64> = field
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    field.grid.fft_forward(&mut data);
    let mean_zero = data[0] == Complex64::new(0.0, 0.0);
    SpectralField {
        grid: field.grid.clone(),
        coeffs: data,
        mean_zero,
    }
}

/// Inverse transform back to real samples.
///
/// The imaginary residue must stay below 1e-10 relative to the field size;
/// anything larger means the Hermitian symmetry is broken and the data is
/// rejected rather than silently truncated.
pub fn inverse_transform(field: &SpectralField) -> Result<PhysicalField> {
    let data = field.to_physical_complex();
    let mut max_im = 0.0_f64;
    let mut max_abs = 0.0_f64;
    for z in &data {
        max_im = max_im.max(z.im.abs());
        max_abs = max_abs.max(z.norm_sqr());
    }
    let max_abs = max_abs.sqrt();
    if max_im > IM_RESIDUE_TOL * max_abs.max(f64::MIN_POSITIVE) {
        return Err(Error::Integrity(format!(
            "broken Hermitian symmetry: imaginary residue {:.3e} relative to field size {:.3e}",
            max_im, max_abs
        )));
    }
    Ok(PhysicalField {
        grid: field.grid.clone(),
        values: data.into_iter().map(|z| z.re).collect(),
    })
}

impl SpectralField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let len = grid.len();
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); len],
            mean_zero: true,
        }
    }

    /// Build from raw coefficients; `mean_zero` is derived from the data.
    pub fn from_coeffs(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Config(format!(
                "{} coefficients for a grid of {} modes",
                coeffs.len(),
                grid.len()
            )));
        }
        let mean_zero = coeffs[0] == Complex64::new(0.0, 0.0);
        Ok(SpectralField {
            grid,
            coeffs,
            mean_zero,
        })
    }

    /// Build a real (Hermitian) field from `(mode, coefficient)` pairs:
    /// each entry sets `coeff(m) = z` and `coeff(-m) = conj(z)`.
    pub fn from_modes(grid: Arc<Grid>, modes: &[([i64; 3], Complex64)]) -> Self {
        let mut field = SpectralField::zeros(grid);
        for &(m, z) in modes {
            let idx = field.grid.index_of_mode(m);
            let cidx = field.grid.conjugate_index(idx);
            field.coeffs[idx] = z;
            field.coeffs[cidx] = z.conj();
            if idx == cidx {
                // self-paired modes (zero and Nyquist planes) must be real
                field.coeffs[idx] = Complex64::new(z.re, 0.0);
            }
        }
        field.mean_zero = field.coeffs[0] == Complex64::new(0.0, 0.0);
        field
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// Force the zero mode to exactly zero; returns the removed coefficient
    /// (the spatial mean of the field) so ingestion sites can log it.
    pub fn remove_mean(&mut self) -> Complex64 {
        let removed = self.coeffs[0];
        self.coeffs[0] = Complex64::new(0.0, 0.0);
        self.mean_zero = true;
        removed
    }

    /// Raw complex inverse transform (no symmetry check).
    pub fn to_physical_complex(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        self.grid.fft_inverse(&mut data);
        data
    }

    /// Max Hermitian-symmetry defect, `max_m |coeff(-m) - conj(coeff(m))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for idx in 0..self.coeffs.len() {
            let c = self.grid.conjugate_index(idx);
            worst = worst.max((self.coeffs[c] - self.coeffs[idx].conj()).norm());
        }
        worst
    }

    /// Homogeneous Sobolev norm `(L³·Σ_{m≠0} |k|^{2s}·|coeff|²)^{1/2}`.
    ///
    /// Negative orders require a mean-zero field; the zero mode never
    /// contributes either way.
    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        if s < 0.0 && !self.mean_zero {
            return Err(Error::Domain(format!(
                "Ḣ^{s} undefined for a field with nonzero mean on the torus"
            )));
        }
        let mut sum = 0.0;
        if s == 0.0 {
            for (idx, c) in self.coeffs.iter().enumerate().skip(1) {
                if self.grid.k2(idx) > 0.0 {
                    sum += c.norm_sqr();
                }
            }
        } else {
            let e = s; // weight |k|^{2s} = (k²)^s
            for (idx, c) in self.coeffs.iter().enumerate().skip(1) {
                let k2 = self.grid.k2(idx);
                if k2 > 0.0 {
                    sum += k2.powf(e) * c.norm_sqr();
                }
            }
        }
        Ok((self.grid.volume() * sum).sqrt())
    }

    /// L² norm via Parseval (equals `sobolev_norm(0)` plus the zero mode).
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.volume() * sum).sqrt()
    }

    /// Band projector: keep modes with `N⁻¹ ≤ |k| ≤ N`, zero the rest.
    /// The zero mode always falls below the band, so the output is mean-zero.
    pub fn project_pn(&self, n_cut: f64) -> Result<SpectralField> {
        if !(n_cut > 1.0) {
            return Err(Error::Parameter(format!(
                "projector band requires N > 1, got {n_cut}"
            )));
        }
        let lo = 1.0 / n_cut;
        let hi = n_cut;
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let k = self.grid.k2(idx).sqrt();
            if !(lo..=hi).contains(&k) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        out.mean_zero = true;
        Ok(out)
    }

    /// `Δ⁻¹`: coefficient(m) ↦ -coefficient(m)/|k(m)|², zero mode stays zero.
    pub fn inverse_laplacian(&self) -> Result<SpectralField> {
        if !self.mean_zero {
            return Err(Error::Domain(
                "Δ⁻¹ requires a mean-zero field".to_string(),
            ));
        }
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            let k2 = self.grid.k2(idx);
            if k2 > 0.0 {
                *c = -*c / k2;
            } else {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Ok(out)
    }

    /// `Δ`: coefficient(m) ↦ -|k(m)|²·coefficient(m).
    pub fn laplacian(&self) -> SpectralField {
        let mut out = self.clone();
        for (idx, c) in out.coeffs.iter_mut().enumerate() {
            *c = -self.grid.k2(idx) * *c;
        }
        out.mean_zero = true;
        out.coeffs[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// Grid max of `|field|` in physical space — a grid approximation of the
    /// true sup; see `sup_norm_padded` for the spectral refinement.
    pub fn sup_norm(&self) -> f64 {
        let data = self.to_physical_complex();
        data.iter()
            .fold(0.0_f64, |m, z| m.max(z.norm_sqr()))
            .sqrt()
    }

    /// Embed the spectrum in a `factor`-times finer grid. Nyquist-plane
    /// energy is split between ±n/2 so real fields stay real.
    pub fn zero_padded(&self, factor: usize) -> Result<SpectralField> {
        if factor == 0 {
            return Err(Error::Parameter("padding factor must be >= 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let fine = Grid::new(self.grid.box_length(), self.grid.n() * factor)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); fine.len()];
        let half = (self.grid.n() / 2) as i64;
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let m = self.grid.mode(idx);
            let nyq = m.iter().filter(|&&a| a == -half).count() as i32;
            if nyq == 0 {
                coeffs[fine.index_of_mode(m)] += c;
            } else {
                // split each Nyquist component over ±half
                let share = c * 0.5_f64.powi(nyq);
                let choices: Vec<[i64; 3]> = split_nyquist(m, -half);
                for mm in choices {
                    coeffs[fine.index_of_mode(mm)] += share;
                }
            }
        }
        SpectralField::from_coeffs(fine, coeffs)
    }

    /// Sup norm on a `factor`-times finer grid via spectral zero-padding.
    pub fn sup_norm_padded(&self, factor: usize) -> Result<f64> {
        Ok(self.zero_padded(factor)?.sup_norm())
    }

    /// Zero every mode with any `|m_i| > n/3` (the 2/3 dealiasing rule).
    pub fn dealias(&mut self) {
        for idx in 0..self.coeffs.len() {
            if self.grid.is_aliased(idx) {
                self.coeffs[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for z in self.coeffs.iter_mut() {
            *z *= c;
        }
    }

    /// self += c · other
    pub fn axpy(&mut self, c: f64, other: &SpectralField) {
        assert!(
            self.grid.same_layout(&other.grid),
            "fields live on different grids"
        );
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += c * b;
        }
        self.mean_zero = self.coeffs[0] == Complex64::new(0.0, 0.0);
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn scaled(&self, c: f64) -> SpectralField {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn split_nyquist(m: [i64; 3], neg_half: i64) -> Vec<[i64; 3]> {
    let mut out = vec![m];
    for axis in 0..3 {
        if m[axis] == neg_half {
            let mut next = Vec::with_capacity(out.len() * 2);
            for base in out {
                let mut plus = base;
                plus[axis] = -neg_half;
                next.push(base);
                next.push(plus);
            }
            out = next;
        }
    }
    out
}

/// L² inner product `(a,b) = L³·Σ_m conj(â_m)·b̂_m` (real part).
pub fn l2_inner(a: &SpectralField, b: &SpectralField) -> f64 {
    assert!(a.grid.same_layout(&b.grid), "fields live on different grids");
    let mut acc = 0.0;
    for (x, y) in a.coeffs.iter().zip(b.coeffs.iter()) {
        acc += (x.conj() * y).re;
    }
    a.grid.volume() * acc
}

/// Ḣ⁻¹ inner product `⟨a,b⟩_{Ḣ⁻¹} = L³·Σ_{m≠0} conj(â)·b̂/|k|²`; equals the
/// L² pairing `(a, -Δ⁻¹b)` on mean-zero fields.
pub fn hm1_inner(a: &SpectralField, b: &SpectralField) -> f64 {
    assert!(a.grid.same_layout(&b.grid), "fields live on different grids");
    let mut acc = 0.0;
    for (idx, (x, y)) in a.coeffs.iter().zip(b.coeffs.iter()).enumerate() {
        let k2 = a.grid.k2(idx);
        if k2 > 0.0 {
            acc += (x.conj() * y).re / k2;
        }
    }
    a.grid.volume() * acc
}
