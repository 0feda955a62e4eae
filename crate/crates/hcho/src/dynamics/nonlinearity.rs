//! Odd-polynomial interaction functions and their structural conditions
//!
//! The admissible family is `f(u) = c₁u + c₃u³ + c₅u⁵` together with the
//! declared sub-quintic margin κ and the structural constants (L, K, C) of
//! the dissipativity and growth conditions
//!
//! ```text
//!   1.  f(u)·u ≥ 0
//!   2.  F(u) ≤ L·f(u)·u + K·u²,   F(u) = ∫₀ᵘ f
//!   3.  |f''(u)| ≤ C·(1 + |u|^{3-κ})
//! ```
//!
//! The quintic coefficient exists so that the verifier can demonstrate the
//! failure of condition 3 for critical growth; the evolution itself is meant
//! to run with sub-quintic (cubic) nonlinearities.

use crate::error::{Error, Result};
use crate::spectral::{forward_transform, inverse_transform, Grid, PhysicalField, SpectralField};
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearitySpec {
    pub c1: f64,
    pub c3: f64,
    pub c5: f64,
    /// Sub-quintic margin, in (0, 3].
    pub kappa: f64,
    /// Constant L of condition 2.
    pub l_const: f64,
    /// Constant K of condition 2.
    pub k_const: f64,
    /// Constant C of condition 3.
    pub c_const: f64,
}

impl NonlinearitySpec {
    /// f ≡ 0: the linear limit.
    pub fn zero() -> Self {
        NonlinearitySpec {
            c1: 0.0,
            c3: 0.0,
            c5: 0.0,
            kappa: 3.0,
            l_const: 1.0,
            k_const: 1.0,
            c_const: 1.0,
        }
    }

    /// The default f(u) = u³, which satisfies all three conditions with
    /// L = 1/4, K = 0, C = 6, κ = 2 (F = u⁴/4 = ¼·f(u)·u, |f''| = 6|u|).
    pub fn cubic() -> Self {
        Self::cubic_scaled(1.0)
    }

    pub fn cubic_scaled(c3: f64) -> Self {
        NonlinearitySpec {
            c1: 0.0,
            c3,
            c5: 0.0,
            kappa: 2.0,
            l_const: 0.25,
            k_const: 0.0,
            c_const: 6.0 * c3.abs().max(1.0),
        }
    }

    pub fn custom(c1: f64, c3: f64, c5: f64, kappa: f64, l: f64, k: f64, c: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 3.0) {
            return Err(Error::Parameter(format!("kappa must lie in (0,3], got {kappa}")));
        }
        if !(l > 0.0 && k >= 0.0 && c > 0.0) {
            return Err(Error::Parameter(
                "structural constants must satisfy L > 0, K >= 0, C > 0".into(),
            ));
        }
        Ok(NonlinearitySpec {
            c1,
            c3,
            c5,
            kappa,
            l_const: l,
            k_const: k,
            c_const: c,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.c1 == 0.0 && self.c3 == 0.0 && self.c5 == 0.0
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        let u2 = u * u;
        u * (self.c1 + u2 * (self.c3 + u2 * self.c5))
    }

    /// Exact polynomial antiderivative F(u) = ∫₀ᵘ f.
    #[inline]
    pub fn antiderivative(&self, u: f64) -> f64 {
        let u2 = u * u;
        u2 * (self.c1 / 2.0 + u2 * (self.c3 / 4.0 + u2 * self.c5 / 6.0))
    }

    #[inline]
    pub fn second_derivative(&self, u: f64) -> f64 {
        u * (6.0 * self.c3 + 20.0 * self.c5 * u * u)
    }

    /// |f'(u)| bound used by the step-size heuristic.
    pub fn derivative_bound(&self, sup: f64) -> f64 {
        self.c1.abs() + 3.0 * self.c3.abs() * sup * sup + 5.0 * self.c5.abs() * sup.powi(4)
    }
}

/// Result of a pointwise nonlinearity application.
pub struct FApplied {
    /// Dealiased spectral coefficients of f(u), mean removed.
    pub fhat: SpectralField,
    /// The spatial mean that was subtracted (Δ annihilates it analytically).
    pub removed_mean: f64,
    /// Grid sup of |u| observed during evaluation.
    pub sup_u: f64,
}

/// Evaluate f(u) pointwise in physical space, dealias by the 2/3 rule, and
/// subtract the mean. `pad = 1` evaluates on the native grid; `pad = 2`
/// evaluates products on a doubled grid before truncating back.
///
/// Returns a blow-up error (stamped with `time`) when `|u|` exceeds 1e8 or a
/// non-finite value appears.
pub fn f_apply_detailed(
    u: &SpectralField,
    spec: &NonlinearitySpec,
    time: f64,
    pad: usize,
) -> Result<FApplied> {
    let sup_guard = 1e8;
    if spec.is_zero() {
        return Ok(FApplied {
            fhat: SpectralField::zeros(u.grid().clone()),
            removed_mean: 0.0,
            sup_u: f64::NAN, // not evaluated on the zero branch
        });
    }
    let (grid, values) = if pad <= 1 {
        (u.grid().clone(), inverse_transform(u)?)
    } else {
        let fine = Grid::new(u.grid().box_length(), u.grid().n() * pad)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); fine.len()];
        for (idx, &c) in u.coeffs().iter().enumerate() {
            let m = u.grid().mode(idx);
            coeffs[fine.index_of_mode(m)] = c;
        }
        let padded = SpectralField::from_coeffs(fine.clone(), coeffs)?;
        (fine, inverse_transform(&padded)?)
    };
    let mut sup_u = 0.0_f64;
    let mut out = Vec::with_capacity(values.values().len());
    for &v in values.values() {
        sup_u = sup_u.max(v.abs());
        out.push(spec.eval(v));
    }
    if !sup_u.is_finite() || sup_u > sup_guard {
        return Err(Error::BlowUp {
            time,
            detail: format!("|u| reached {sup_u:.3e} during f(u) evaluation"),
            partial: None,
        });
    }
    let fine_hat = forward_transform(&PhysicalField::new(grid.clone(), out)?);
    let mut fhat = if pad <= 1 {
        fine_hat
    } else {
        let coarse = u.grid().clone();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); coarse.len()];
        let half = (coarse.n() / 2) as i64;
        for (idx, slot) in coeffs.iter_mut().enumerate() {
            let m = coarse.mode(idx);
            // the coarse Nyquist plane has no faithful image on the fine grid
            if m.iter().any(|&a| a == -half) {
                continue;
            }
            *slot = fine_hat.coeffs()[grid.index_of_mode(m)];
        }
        SpectralField::from_coeffs(coarse, coeffs)?
    };
    fhat.dealias();
    let removed = fhat.remove_mean();
    Ok(FApplied {
        fhat,
        removed_mean: removed.re,
        sup_u,
    })
}

/// Dealiased spectral image of f(u) with the mean subtracted.
pub fn f_apply(u: &SpectralField, spec: &NonlinearitySpec) -> Result<SpectralField> {
    Ok(f_apply_detailed(u, spec, f64::NAN, 1)?.fhat)
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    pub passed: bool,
    /// Sample point with the worst margin (violations are negative margins).
    pub worst_u: f64,
    pub worst_margin: f64,
    /// Whether the condition also holds as |u| → ∞ by degree comparison.
    pub holds_at_infinity: bool,
}

#[derive(Clone, Debug)]
pub struct StructuralReport {
    pub sign: ConditionReport,
    pub potential_bound: ConditionReport,
    pub growth: ConditionReport,
}

impl StructuralReport {
    pub fn all_pass(&self) -> bool {
        self.sign.passed && self.potential_bound.passed && self.growth.passed
    }
}

/// Check the three structural conditions on a dense sample grid over
/// `[-umax, umax]` plus leading-order degree comparison at infinity.
pub fn verify_structural_conditions(
    spec: &NonlinearitySpec,
    umax: f64,
    samples: usize,
) -> Result<StructuralReport> {
    if samples < 1000 {
        return Err(Error::Parameter(format!(
            "structural check needs at least 1000 samples, got {samples}"
        )));
    }
    if !(umax > 0.0) {
        return Err(Error::Parameter("umax must be positive".into()));
    }

    let mut sign = ConditionReport {
        passed: true,
        worst_u: 0.0,
        worst_margin: f64::INFINITY,
        holds_at_infinity: true,
    };
    let mut pot = sign.clone();
    let mut growth = sign.clone();

    for i in 0..=samples {
        let u = -umax + 2.0 * umax * i as f64 / samples as f64;
        let fu = spec.eval(u);
        let margin1 = fu * u;
        if margin1 < sign.worst_margin {
            sign.worst_margin = margin1;
            sign.worst_u = u;
        }
        let margin2 = spec.l_const * fu * u + spec.k_const * u * u - spec.antiderivative(u);
        if margin2 < pot.worst_margin {
            pot.worst_margin = margin2;
            pot.worst_u = u;
        }
        let margin3 =
            spec.c_const * (1.0 + u.abs().powf(3.0 - spec.kappa)) - spec.second_derivative(u).abs();
        if margin3 < growth.worst_margin {
            growth.worst_margin = margin3;
            growth.worst_u = u;
        }
    }

    // Leading-order behaviour: the sign condition needs a nonnegative leading
    // coefficient; the growth condition compares polynomial degrees.
    let leading = if spec.c5 != 0.0 {
        spec.c5
    } else if spec.c3 != 0.0 {
        spec.c3
    } else {
        spec.c1
    };
    sign.holds_at_infinity = leading >= 0.0;

    let f2_degree = if spec.c5 != 0.0 {
        3.0
    } else if spec.c3 != 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    growth.holds_at_infinity = f2_degree <= 3.0 - spec.kappa;

    // Condition 2 at infinity: compare the u⁶/u⁴/u² coefficients of
    // L·f(u)·u + K·u² - F(u).
    let lead6 = spec.l_const * spec.c5 - spec.c5 / 6.0;
    let lead4 = spec.l_const * spec.c3 - spec.c3 / 4.0;
    let lead2 = spec.l_const * spec.c1 + spec.k_const - spec.c1 / 2.0;
    pot.holds_at_infinity = if spec.c5 != 0.0 {
        lead6 > 0.0 || (lead6 == 0.0 && lead4 >= 0.0)
    } else if spec.c3 != 0.0 {
        lead4 > 0.0 || (lead4 == 0.0 && lead2 >= 0.0)
    } else {
        lead2 >= 0.0
    };

    let tol = 0.0;
    sign.passed = sign.worst_margin >= -tol && sign.holds_at_infinity;
    pot.passed = pot.worst_margin >= -tol && pot.holds_at_infinity;
    growth.passed = growth.worst_margin >= -tol && growth.holds_at_infinity;

    Ok(StructuralReport {
        sign,
        potential_bound: pot,
        growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{l2_inner, Grid, SpectralField};

    #[test]
    fn zero_maps_to_zero() {
        let grid = Grid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let u = SpectralField::zeros(grid);
        let out = f_apply(&u, &NonlinearitySpec::cubic()).unwrap();
        assert_eq!(out.l2_norm(), 0.0);
    }

    #[test]
    fn cubic_of_cosine_splits_into_first_and_third_harmonic() {
        // cos³θ = ¾cosθ + ¼cos3θ, so with u = a·cos(k·x) the spectral image
        // of u³ has coefficients 3a³/8 at ±m and a³/8 at ±3m.
        let grid = Grid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let a = 0.7;
        let u = SpectralField::from_modes(
            grid.clone(),
            &[([1, 0, 0], Complex64::new(a / 2.0, 0.0))],
        );
        let out = f_apply(&u, &NonlinearitySpec::cubic()).unwrap();
        for idx in 0..grid.len() {
            let m = grid.mode(idx);
            let want = if m == [1, 0, 0] || m == [-1, 0, 0] {
                3.0 * a.powi(3) / 8.0
            } else if m == [3, 0, 0] || m == [-3, 0, 0] {
                a.powi(3) / 8.0
            } else {
                0.0
            };
            assert!(
                (out.coeffs()[idx] - Complex64::new(want, 0.0)).norm() < 1e-13,
                "mode {m:?}: got {}, want {want}",
                out.coeffs()[idx]
            );
        }
    }

    #[test]
    fn spectral_l2_matches_physical_quadrature() {
        let grid = Grid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let u = SpectralField::from_modes(
            grid.clone(),
            &[
                ([1, 0, 0], Complex64::new(0.3, 0.0)),
                ([0, 2, 1], Complex64::new(0.1, -0.05)),
            ],
        );
        let spec = NonlinearitySpec::cubic();
        let out = f_apply(&u, &spec).unwrap();
        // direct physical-space quadrature of (f(u) - mean)²
        let phys = inverse_transform(&u).unwrap();
        let mut vals: Vec<f64> = phys.values().iter().map(|&v| spec.eval(v)).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        for v in vals.iter_mut() {
            *v -= mean;
        }
        let quad = PhysicalField::new(grid.clone(), vals.iter().map(|v| v * v).collect())
            .unwrap()
            .quadrature();
        // band-limited input: no dealiasing loss, Parseval is exact
        let l2 = l2_inner(&out, &out);
        assert!((l2 - quad).abs() < 1e-10 * quad.max(1e-30));
    }

    #[test]
    fn dealias_commutes_with_grid_refinement_for_banded_cubic() {
        let l = 2.0 * std::f64::consts::PI;
        let coarse = Grid::new(l, 16).unwrap();
        let fine = Grid::new(l, 32).unwrap();
        let modes = [
            ([1, 0, 0], Complex64::new(0.4, 0.0)),
            ([0, 1, 1], Complex64::new(0.15, 0.1)),
        ];
        let u_c = SpectralField::from_modes(coarse.clone(), &modes);
        let u_f = SpectralField::from_modes(fine.clone(), &modes);
        let spec = NonlinearitySpec::cubic();
        let out_c = f_apply(&u_c, &spec).unwrap();
        let out_f = f_apply(&u_f, &spec).unwrap();
        for idx in 0..coarse.len() {
            let m = coarse.mode(idx);
            if coarse.is_aliased(idx) {
                continue;
            }
            let want = out_f.coeffs()[fine.index_of_mode(m)];
            assert!(
                (out_c.coeffs()[idx] - want).norm() < 1e-12,
                "retained mode {m:?} differs between 16³ and 32³"
            );
        }
    }

    #[test]
    fn padded_evaluation_matches_exact_cubic() {
        let grid = Grid::new(2.0 * std::f64::consts::PI, 16).unwrap();
        let u = SpectralField::from_modes(
            grid.clone(),
            &[([1, 0, 0], Complex64::new(0.35, 0.0)), ([2, 0, 1], Complex64::new(0.1, 0.2))],
        );
        let plain = f_apply_detailed(&u, &NonlinearitySpec::cubic(), 0.0, 1).unwrap();
        let padded = f_apply_detailed(&u, &NonlinearitySpec::cubic(), 0.0, 2).unwrap();
        // band-limited data on this grid is alias-free either way
        let diff = plain.fhat.sub(&padded.fhat);
        assert!(diff.l2_norm() < 1e-12);
        assert!((plain.sup_u - padded.sup_u).abs() < 1e-3 * plain.sup_u.max(1e-30));
    }

    #[test]
    fn blow_up_is_detected() {
        let grid = Grid::new(2.0 * std::f64::consts::PI, 8).unwrap();
        let u = SpectralField::from_modes(
            grid.clone(),
            &[([1, 0, 0], Complex64::new(1e9, 0.0))],
        );
        match f_apply_detailed(&u, &NonlinearitySpec::cubic(), 1.5, 1) {
            Err(Error::BlowUp { time, .. }) => assert_eq!(time, 1.5),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn cubic_passes_all_conditions() {
        let report =
            verify_structural_conditions(&NonlinearitySpec::cubic(), 10.0, 2000).unwrap();
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn negative_linear_fails_sign_condition() {
        let spec = NonlinearitySpec::custom(-1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let report = verify_structural_conditions(&spec, 5.0, 2000).unwrap();
        assert!(!report.sign.passed);
        assert!(report.sign.worst_margin < 0.0);
    }

    #[test]
    fn quintic_fails_growth_for_every_positive_kappa() {
        for &kappa in &[0.25, 0.5, 1.0, 2.0, 3.0] {
            let spec = NonlinearitySpec::custom(0.0, 0.0, 1.0, kappa, 0.25, 0.0, 100.0).unwrap();
            let report = verify_structural_conditions(&spec, 50.0, 2000).unwrap();
            assert!(!report.growth.passed, "kappa={kappa} should fail");
            assert!(!report.growth.holds_at_infinity);
        }
    }

    #[test]
    fn too_few_samples_is_an_error() {
        assert!(verify_structural_conditions(&NonlinearitySpec::cubic(), 1.0, 10).is_err());
    }
}
