//! Periodic-box spectral representation: grids, fields, transforms, norms.
//!
//! Conventions, fixed once and used everywhere:
//!
//! * Grid points `x_j = L·j/n`, mode triples `m` with components in
//!   `[-n/2, n/2)`, wavenumbers `k = (2π/L)·m`.
//! * Forward transform divides by `n³`:
//!   `coeff(m) = (1/n³)·Σ_j field(x_j)·exp(-i k·x_j)`; the inverse is the
//!   plain exponential sum. A unit constant field has `coeff(0) = 1`.
//! * Parseval in this convention: `∫ f² dx ≈ (L³/n³)·Σ_j f(x_j)² = L³·Σ_m |coeff(m)|²`.
//! * Homogeneous Sobolev norm: `‖f‖²_{Ḣˢ} = L³·Σ_{m≠0} |k(m)|^{2s}·|coeff(m)|²`.
//!   The zero mode never contributes; for `s < 0` the field must be mean-zero.
//! * `L^∞` is approximated by the grid max; `sup_norm_padded` refines it by
//!   spectral zero-padding.

mod fft;
mod field;
mod grid;
mod state;

pub use field::{
    forward_transform, hm1_inner, inverse_transform, l2_inner, PhysicalField, SpectralField,
};
pub use grid::{Grid, DEFAULT_BOX_LENGTH};
pub use state::{energy_norm, StateVector};
