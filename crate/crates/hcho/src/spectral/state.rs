//! The evolved pair ξ = (u, ∂_t u) and its energy norm.

use super::field::SpectralField;
use crate::error::{Error, Result};

/// A point of the energy phase space: the order parameter `u`, its time
/// derivative `v = ∂_t u`, and the time stamp they belong to.
#[derive(Clone, Debug)]
pub struct StateVector {
    pub u: SpectralField,
    pub v: SpectralField,
    pub time: f64,
}

impl StateVector {
    /// Both components must live on the same grid and be mean-zero.
    pub fn new(u: SpectralField, v: SpectralField, time: f64) -> Result<Self> {
        if !u.grid().same_layout(v.grid()) {
            return Err(Error::Config(
                "state components live on different grids".to_string(),
            ));
        }
        if !u.is_mean_zero() || !v.is_mean_zero() {
            return Err(Error::Domain(
                "state components must be mean-zero; remove the mean at ingestion".to_string(),
            ));
        }
        Ok(StateVector { u, v, time })
    }

    pub fn zeros(grid: std::sync::Arc<super::grid::Grid>) -> Self {
        StateVector {
            u: SpectralField::zeros(grid.clone()),
            v: SpectralField::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &std::sync::Arc<super::grid::Grid> {
        self.u.grid()
    }

    /// ξ₁ - ξ₂ (time stamp taken from `self`).
    pub fn sub(&self, other: &StateVector) -> StateVector {
        StateVector {
            u: self.u.sub(&other.u),
            v: self.v.sub(&other.v),
            time: self.time,
        }
    }

    pub fn scaled(&self, c: f64) -> StateVector {
        StateVector {
            u: self.u.scaled(c),
            v: self.v.scaled(c),
            time: self.time,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Energy norm `‖ξ‖²_𝓔 = ‖∂_t u‖²_{Ḣ⁻¹} + ‖u‖²_{Ḣ¹} + α‖u‖²_{Ḣ⁻¹}`.
pub fn energy_norm(state: &StateVector, alpha: f64) -> Result<f64> {
    debug_assert!(alpha > 0.0);
    let v = state.v.sobolev_norm(-1.0)?;
    let u1 = state.u.sobolev_norm(1.0)?;
    let um1 = state.u.sobolev_norm(-1.0)?;
    Ok((v * v + u1 * u1 + alpha * um1 * um1).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::Grid;
    use num_complex::Complex64;

    #[test]
    fn zero_state_has_zero_norm() {
        let grid = Grid::new(2.0 * std::f64::consts::PI, 8).unwrap();
        let state = StateVector::zeros(grid);
        assert_eq!(energy_norm(&state, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_energy_norm() {
        // u = cos(2πx/L) on the 2π box, v = 0, α = 1:
        // ‖ξ‖² = ‖u‖²_{Ḣ¹} + ‖u‖²_{Ḣ⁻¹} with both terms equal at |k| = 1.
        let grid = Grid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let u = SpectralField::from_modes(grid.clone(), &[([1, 0, 0], Complex64::new(0.5, 0.0))]);
        let h1 = u.sobolev_norm(1.0).unwrap();
        let hm1 = u.sobolev_norm(-1.0).unwrap();
        let state = StateVector::new(u, SpectralField::zeros(grid), 0.0).unwrap();
        let e = energy_norm(&state, 1.0).unwrap();
        assert!((e * e - (h1 * h1 + hm1 * hm1)).abs() < 1e-12);
    }

    #[test]
    fn energy_norm_is_homogeneous() {
        let grid = Grid::new(2.0 * std::f64::consts::PI, 8).unwrap();
        let u = SpectralField::from_modes(
            grid.clone(),
            &[
                ([1, 0, 0], Complex64::new(0.5, 0.0)),
                ([1, 2, 0], Complex64::new(0.1, -0.2)),
            ],
        );
        let v = SpectralField::from_modes(grid.clone(), &[([0, 1, 1], Complex64::new(0.3, 0.0))]);
        let state = StateVector::new(u, v, 0.0).unwrap();
        let e = energy_norm(&state, 0.7).unwrap();
        let e3 = energy_norm(&state.scaled(-3.0), 0.7).unwrap();
        assert!((e3 - 3.0 * e).abs() < 1e-12 * e.max(1.0));
    }

    #[test]
    fn mismatched_or_dirty_states_are_rejected() {
        let g1 = Grid::new(2.0 * std::f64::consts::PI, 8).unwrap();
        let g2 = Grid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let u = SpectralField::zeros(g1.clone());
        let v = SpectralField::zeros(g2);
        assert!(StateVector::new(u, v, 0.0).is_err());

        let mut dirty = SpectralField::zeros(g1.clone());
        dirty.coeffs_mut()[0] = Complex64::new(0.5, 0.0);
        let dirty = SpectralField::from_coeffs(g1.clone(), dirty.coeffs().to_vec()).unwrap();
        assert!(StateVector::new(dirty, SpectralField::zeros(g1), 0.0).is_err());
    }
}
