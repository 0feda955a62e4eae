//! Exponential time integration of the nonlinear flow.
//!
//! The linear part is applied exactly per mode through the 2×2 propagator of
//! `û'' + û' + (ω²+α)û = r`; the nonlinear forcing `r = ω(ĝ - f̂(u))` is
//! handled by exponential time differencing:
//!
//! * `Etd1` — forcing frozen at the step start, weighted by the exact
//!   `Φ₁ = A⁻¹(e^{dtA}-I)`; first order, exact for constant forcing.
//! * `Etd2Midpoint` — an ETD1 half step predicts `u(t+dt/2)`, the forcing is
//!   re-evaluated there and applied with the full-step `Φ₁`; second order.
//!
//! Both reduce to the exact linear propagator when `f ≡ 0` and `g = 0`, and
//! both preserve spectral equilibria of the forced problem exactly.

use super::nonlinearity::{f_apply_detailed, NonlinearitySpec};
use crate::error::{Error, Result};
use crate::propagators::{lin_cho_evolve, ChoModePropagator, ForcingSampler};
use crate::spectral::{hm1_inner, l2_inner, SpectralField, StateVector};
use num_complex::Complex64;

/// Heuristic explicit-stability threshold: warn when `dt·sup|f'(u)| > 2`.
const CFL_WARN_THRESHOLD: f64 = 2.0;
/// Grid sup above which the run is declared blown up.
const BLOW_UP_SUP: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Etd1,
    Etd2Midpoint,
}

impl Scheme {
    pub fn order(&self) -> usize {
        match self {
            Scheme::Etd1 => 1,
            Scheme::Etd2Midpoint => 2,
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "etd1" => Ok(Scheme::Etd1),
            "etd2" | "etd2-midpoint" | "etd2_midpoint" => Ok(Scheme::Etd2Midpoint),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Etd1 => write!(f, "etd1"),
            Scheme::Etd2Midpoint => write!(f, "etd2-midpoint"),
        }
    }
}

/// Everything the stepper needs besides the state and the nonlinearity.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub dt: f64,
    pub scheme: Scheme,
    /// Padding factor for nonlinear products (1 = native grid + 2/3 mask).
    pub dealias_pad: usize,
    pub alpha: f64,
    /// External force g, mean-zero on the state's grid.
    pub g: SpectralField,
    /// Snapshots every this many steps.
    pub snapshot_every: usize,
    /// Retain full states at snapshots (memory permitting).
    pub keep_states: bool,
    /// Evaluate the potential quadrature on a doubled grid.
    pub quad_refine: bool,
}

impl SolverConfig {
    pub fn new(dt: f64, scheme: Scheme, alpha: f64, g: SpectralField) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
        }
        if !g.is_mean_zero() {
            return Err(Error::Domain(
                "external force must be mean-zero; remove the mean at ingestion".into(),
            ));
        }
        if !g.is_finite() {
            return Err(Error::Config("external force has non-finite coefficients".into()));
        }
        Ok(SolverConfig {
            dt,
            scheme,
            dealias_pad: 1,
            alpha,
            g,
            snapshot_every: 1,
            keep_states: true,
            quad_refine: false,
        })
    }

    pub fn snapshot_spacing(&self) -> f64 {
        self.dt * self.snapshot_every.max(1) as f64
    }
}

/// Precomputed per-mode propagator entries for one (grid, dt, alpha) triple.
struct EtdTables {
    omega: Vec<f64>,
    e_full: Vec<[f64; 4]>,
    phi_full: Vec<[f64; 2]>,
    e_half: Vec<[f64; 4]>,
    phi_half: Vec<[f64; 2]>,
}

impl EtdTables {
    fn build(grid: &crate::spectral::Grid, dt: f64, alpha: f64, scheme: Scheme) -> Self {
        let len = grid.len();
        let mut omega = Vec::with_capacity(len);
        let mut e_full = Vec::with_capacity(len);
        let mut phi_full = Vec::with_capacity(len);
        let mut e_half = Vec::new();
        let mut phi_half = Vec::new();
        let halved = scheme == Scheme::Etd2Midpoint;
        if halved {
            e_half.reserve(len);
            phi_half.reserve(len);
        }
        for idx in 0..len {
            let w = grid.k2(idx);
            let prop = ChoModePropagator {
                q: w * w + alpha,
            };
            omega.push(w);
            e_full.push(prop.entries(dt));
            let (pu, pv) = prop.phi1_forcing(dt);
            phi_full.push([pu, pv]);
            if halved {
                e_half.push(prop.entries(dt / 2.0));
                let (hu, hv) = prop.phi1_forcing(dt / 2.0);
                phi_half.push([hu, hv]);
            }
        }
        EtdTables {
            omega,
            e_full,
            phi_full,
            e_half,
            phi_half,
        }
    }
}

struct StepStats {
    sup_u: f64,
    f_mean: f64,
    cfl_flag: bool,
}

fn step_with_tables(
    state: &StateVector,
    config: &SolverConfig,
    spec: &NonlinearitySpec,
    tables: &EtdTables,
) -> Result<(StateVector, StepStats)> {
    let grid = state.grid().clone();
    let len = grid.len();
    let mut stats = StepStats {
        sup_u: f64::NAN,
        f_mean: f64::NAN,
        cfl_flag: false,
    };

    // forcing spectrum at the step start: r = ω(ĝ - f̂(u))
    let fhat0 = if spec.is_zero() {
        None
    } else {
        let applied = f_apply_detailed(&state.u, spec, state.time, config.dealias_pad)?;
        stats.sup_u = applied.sup_u;
        stats.f_mean = applied.removed_mean;
        stats.cfl_flag = config.dt * spec.derivative_bound(applied.sup_u) > CFL_WARN_THRESHOLD;
        Some(applied.fhat)
    };
    let r_at = |idx: usize, fhat: &Option<SpectralField>| -> Complex64 {
        let mut r = config.g.coeffs()[idx];
        if let Some(f) = fhat {
            r -= f.coeffs()[idx];
        }
        tables.omega[idx] * r
    };

    let r_final: Option<SpectralField> = match config.scheme {
        Scheme::Etd1 => None,
        Scheme::Etd2Midpoint => {
            if spec.is_zero() {
                None // constant forcing: the midpoint value equals the start value
            } else {
                // half-step prediction of u only
                let mut u_half = SpectralField::zeros(grid.clone());
                for idx in 0..len {
                    let e = tables.e_half[idx];
                    let phi = tables.phi_half[idx];
                    u_half.coeffs_mut()[idx] = e[0] * state.u.coeffs()[idx]
                        + e[1] * state.v.coeffs()[idx]
                        + phi[0] * r_at(idx, &fhat0);
                }
                u_half.remove_mean();
                let mid =
                    f_apply_detailed(&u_half, spec, state.time + config.dt / 2.0, config.dealias_pad)?;
                stats.sup_u = stats.sup_u.max(mid.sup_u);
                Some(mid.fhat)
            }
        }
    };
    let fhat_used = match config.scheme {
        Scheme::Etd1 => &fhat0,
        Scheme::Etd2Midpoint => {
            if spec.is_zero() {
                &fhat0
            } else {
                &r_final
            }
        }
    };

    let mut u = SpectralField::zeros(grid.clone());
    let mut v = SpectralField::zeros(grid);
    for idx in 0..len {
        let e = tables.e_full[idx];
        let phi = tables.phi_full[idx];
        let a = state.u.coeffs()[idx];
        let b = state.v.coeffs()[idx];
        let r = r_at(idx, fhat_used);
        u.coeffs_mut()[idx] = e[0] * a + e[1] * b + phi[0] * r;
        v.coeffs_mut()[idx] = e[2] * a + e[3] * b + phi[1] * r;
    }
    u.remove_mean();
    v.remove_mean();
    let next = StateVector::new(u, v, state.time + config.dt)?;
    Ok((next, stats))
}

/// Advance one time step of length `config.dt`.
///
/// With a zero nonlinearity this reduces to the exact linear propagator (plus
/// the exact constant-forcing Duhamel weight when `g ≠ 0`).
pub fn step(
    state: &StateVector,
    config: &SolverConfig,
    spec: &NonlinearitySpec,
) -> Result<StateVector> {
    if !state.grid().same_layout(config.g.grid()) {
        return Err(Error::Config("state and forcing grids differ".into()));
    }
    let tables = EtdTables::build(state.grid(), config.dt, config.alpha, config.scheme);
    Ok(step_with_tables(state, config, spec, &tables)?.0)
}

/// Per-snapshot scalar diagnostics recorded along a trajectory. All series
/// share the snapshot times; `dissipation_integral` is the running trapezoid
/// quadrature of `‖∂_t u‖²_{Ḣ⁻¹}` accumulated every step.
#[derive(Clone, Debug, Default)]
pub struct ScalarSeries {
    pub v_hm1_sq: Vec<f64>,
    pub u_h1_sq: Vec<f64>,
    pub u_hm1_sq: Vec<f64>,
    /// `(∂_t u, -Δ⁻¹u) = ⟨v,u⟩_{Ḣ⁻¹}`, the Lyapunov cross term.
    pub cross: Vec<f64>,
    /// `(F(u), 1)` by physical-space quadrature of the exact antiderivative.
    pub potential: Vec<f64>,
    pub g_dot_u: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub u_h3_sq: Vec<f64>,
    pub v_h1_sq: Vec<f64>,
    pub dissipation_integral: Vec<f64>,
    /// Spatial mean removed from f(u) at the step preceding each snapshot.
    pub f_mean: Vec<f64>,
}

impl ScalarSeries {
    pub fn len(&self) -> usize {
        self.v_hm1_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_hm1_sq.is_empty()
    }
}

/// A discrete Strichartz-solution approximation: snapshot times, the scalar
/// series at those times, optionally the full states, and run metadata.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub series: ScalarSeries,
    /// Full snapshot states when the config kept them, else empty.
    pub states: Vec<StateVector>,
    pub final_state: StateVector,
    pub alpha: f64,
    pub snapshot_spacing: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub cfl_warnings: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `‖ξ‖²_𝓔` at snapshot i.
    pub fn energy_sq(&self, i: usize) -> f64 {
        self.series.v_hm1_sq[i] + self.series.u_h1_sq[i] + self.alpha * self.series.u_hm1_sq[i]
    }

    pub fn energy_norm(&self, i: usize) -> f64 {
        self.energy_sq(i).sqrt()
    }

    /// Full energy `½‖ξ‖²_𝓔 + (F(u),1) - (g,u)` at snapshot i.
    pub fn full_energy(&self, i: usize) -> f64 {
        0.5 * self.energy_sq(i) + self.series.potential[i] - self.series.g_dot_u[i]
    }

    /// Lyapunov functional `½‖ξ‖²_𝓔 + δ(∂_t u,-Δ⁻¹u) + (δ/2)‖u‖²_{Ḣ⁻¹} + (F(u),1)`.
    pub fn lyapunov(&self, i: usize, delta: f64) -> f64 {
        0.5 * self.energy_sq(i)
            + delta * self.series.cross[i]
            + 0.5 * delta * self.series.u_hm1_sq[i]
            + self.series.potential[i]
    }

    /// `‖ξ‖²_𝓔₂` at snapshot i.
    pub fn e2_sq(&self, i: usize) -> f64 {
        self.series.u_h3_sq[i]
            + self.series.u_hm1_sq[i]
            + self.series.v_h1_sq[i]
            + self.series.v_hm1_sq[i]
    }

    pub fn e2_norm(&self, i: usize) -> f64 {
        self.e2_sq(i).sqrt()
    }

    pub fn energy_series(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.energy_norm(i)).collect()
    }
}

fn snapshot_scalars(
    state: &StateVector,
    config: &SolverConfig,
    spec: &NonlinearitySpec,
    diss: f64,
    f_mean: f64,
    series: &mut ScalarSeries,
) -> Result<(f64, f64)> {
    let u = &state.u;
    let v = &state.v;
    let vh = v.sobolev_norm(-1.0)?;
    let u1 = u.sobolev_norm(1.0)?;
    let um1 = u.sobolev_norm(-1.0)?;
    let u3 = u.sobolev_norm(3.0)?;
    let v1 = v.sobolev_norm(1.0)?;
    series.v_hm1_sq.push(vh * vh);
    series.u_h1_sq.push(u1 * u1);
    series.u_hm1_sq.push(um1 * um1);
    series.cross.push(hm1_inner(v, u));
    series.u_h3_sq.push(u3 * u3);
    series.v_h1_sq.push(v1 * v1);
    series.g_dot_u.push(l2_inner(&config.g, u));
    let (pot, sup) = potential_and_sup(u, spec, config.quad_refine)?;
    series.potential.push(pot);
    series.sup_u.push(sup);
    series.dissipation_integral.push(diss);
    series.f_mean.push(f_mean);
    Ok((vh * vh, sup))
}

/// `((F(u),1), sup|u|)` from one inverse transform; `refine` doubles the
/// quadrature grid (useful when F has degree 6).
pub(crate) fn potential_and_sup(
    u: &SpectralField,
    spec: &NonlinearitySpec,
    refine: bool,
) -> Result<(f64, f64)> {
    let field = if refine {
        crate::spectral::inverse_transform(&u.zero_padded(2)?)?
    } else {
        crate::spectral::inverse_transform(u)?
    };
    let mut pot = 0.0;
    let mut sup = 0.0_f64;
    for &x in field.values() {
        pot += spec.antiderivative(x);
        sup = sup.max(x.abs());
    }
    Ok((pot * field.grid().cell_volume(), sup))
}

/// Evolve for (at least) `t_final`, snapshotting every `config.snapshot_every`
/// steps and invoking each observer at snapshot times. The horizon is rounded
/// up to a whole number of snapshot intervals so spacing stays uniform.
///
/// On blow-up the error carries the partial trajectory recorded so far.
pub fn evolve(
    state: &StateVector,
    t_final: f64,
    config: &SolverConfig,
    spec: &NonlinearitySpec,
    observers: &mut [&mut dyn FnMut(&StateVector)],
) -> Result<Trajectory> {
    if t_final < config.dt * (1.0 - 1e-12) {
        return Err(Error::Parameter(format!(
            "horizon {t_final} shorter than one step dt = {}",
            config.dt
        )));
    }
    if !state.grid().same_layout(config.g.grid()) {
        return Err(Error::Config("state and forcing grids differ".into()));
    }
    let per_snap = config.snapshot_every.max(1);
    let spacing = config.dt * per_snap as f64;
    let n_snaps = ((t_final / spacing) - 1e-9).ceil().max(1.0) as usize;
    let n_steps = n_snaps * per_snap;

    let tables = EtdTables::build(state.grid(), config.dt, config.alpha, config.scheme);
    let mut series = ScalarSeries::default();
    let mut times = Vec::with_capacity(n_snaps + 1);
    let mut states = Vec::new();
    let mut cfl_warnings = 0usize;

    let mut current = state.clone();
    let mut diss = 0.0;
    let mut last_v_sq = {
        let vh = current.v.sobolev_norm(-1.0)?;
        vh * vh
    };
    let mut last_f_mean = f64::NAN;

    let build_partial = |times: &[f64],
                         series: &ScalarSeries,
                         states: &[StateVector],
                         final_state: &StateVector,
                         cfl: usize| Trajectory {
        times: times.to_vec(),
        series: series.clone(),
        states: states.to_vec(),
        final_state: final_state.clone(),
        alpha: config.alpha,
        snapshot_spacing: spacing,
        dt: config.dt,
        scheme: config.scheme,
        cfl_warnings: cfl,
    };

    // snapshot at t = 0
    times.push(current.time);
    let (_, sup0) = snapshot_scalars(&current, config, spec, diss, last_f_mean, &mut series)?;
    if !sup0.is_finite() || sup0 > BLOW_UP_SUP {
        return Err(Error::BlowUp {
            time: current.time,
            detail: format!("initial data already out of range (sup = {sup0:.3e})"),
            partial: None,
        });
    }
    if config.keep_states {
        states.push(current.clone());
    }
    for obs in observers.iter_mut() {
        obs(&current);
    }

    for istep in 1..=n_steps {
        let (next, stats) = match step_with_tables(&current, config, spec, &tables) {
            Ok(pair) => pair,
            Err(Error::BlowUp { time, detail, .. }) => {
                let partial = build_partial(&times, &series, &states, &current, cfl_warnings);
                return Err(Error::BlowUp {
                    time,
                    detail,
                    partial: Some(Box::new(partial)),
                });
            }
            Err(e) => return Err(e),
        };
        if stats.cfl_flag {
            cfl_warnings += 1;
        }
        if stats.f_mean.is_finite() {
            last_f_mean = stats.f_mean;
        }
        let vh = next.v.sobolev_norm(-1.0)?;
        let v_sq = vh * vh;
        diss += 0.5 * config.dt * (last_v_sq + v_sq);
        last_v_sq = v_sq;
        current = next;

        if istep % per_snap == 0 {
            times.push(current.time);
            let (_, sup) =
                snapshot_scalars(&current, config, spec, diss, last_f_mean, &mut series)?;
            if config.keep_states {
                states.push(current.clone());
            }
            for obs in observers.iter_mut() {
                obs(&current);
            }
            if !sup.is_finite() || sup > BLOW_UP_SUP || !current.is_finite() {
                let partial = build_partial(&times, &series, &states, &current, cfl_warnings);
                return Err(Error::BlowUp {
                    time: current.time,
                    detail: format!("sup |u| = {sup:.3e} at snapshot"),
                    partial: Some(Box::new(partial)),
                });
            }
        }
    }

    Ok(Trajectory {
        times,
        series,
        states,
        final_state: current,
        alpha: config.alpha,
        snapshot_spacing: spacing,
        dt: config.dt,
        scheme: config.scheme,
        cfl_warnings,
    })
}

/// Successive differences and contraction factors of the Duhamel fixed point.
#[derive(Clone, Debug)]
pub struct DuhamelReport {
    pub node_times: Vec<f64>,
    /// Iterate trajectories u⁽⁰⁾, u⁽¹⁾, …, sampled at the node times.
    pub iterates: Vec<Vec<StateVector>>,
    /// `d_j = ‖u⁽ʲ⁾ - u⁽ʲ⁻¹⁾‖` in the C(0,τ;𝓔) + L⁴(0,τ;L^∞) norm.
    pub differences: Vec<f64>,
    /// `d_{j+1}/d_j`.
    pub ratios: Vec<f64>,
    /// True when the trailing ratios stay above 1 (a too-large τ).
    pub diverged: bool,
}

/// Iterate the variation-of-constants map
/// `u ↦ (linear CHO evolution of ξ0 with forcing f(u) - g)` on `[0, τ]`.
///
/// Iterate 0 takes f ≡ 0. The norm combines the max energy norm over the
/// nodes with the trapezoid `L⁴(0,τ;L^∞)` quadrature; iterate forcings are
/// linearly interpolated between the nodes, which fixes the discretization
/// so the reported ratios are reproducible.
pub fn duhamel_iterate(
    xi0: &StateVector,
    tau: f64,
    iterations: usize,
    config: &SolverConfig,
    spec: &NonlinearitySpec,
) -> Result<DuhamelReport> {
    if iterations < 2 {
        return Err(Error::Parameter(
            "fixed-point study needs at least 2 iterations".into(),
        ));
    }
    if !(tau > 0.0) {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    let mut m = ((tau / config.dt).ceil() as usize).max(4);
    if m % 2 == 1 {
        m += 1;
    }
    let h = tau / m as f64;
    let node_times: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();

    let evolve_nodes = |forcing: &ForcingSampler| -> Result<Vec<StateVector>> {
        node_times
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    Ok(xi0.clone())
                } else {
                    lin_cho_evolve(xi0, t, config.alpha, Some(forcing))
                }
            })
            .collect()
    };

    let forcing0 = ForcingSampler::constant(config.g.scaled(-1.0), h);
    let mut iterates = vec![evolve_nodes(&forcing0)?];
    let mut differences = Vec::new();

    for j in 1..=iterations {
        let prev = &iterates[j - 1];
        let fields: Vec<SpectralField> = prev
            .iter()
            .map(|st| {
                let fu = f_apply_detailed(&st.u, spec, st.time, config.dealias_pad)?;
                Ok(fu.fhat.sub(&config.g))
            })
            .collect::<Result<_>>()?;
        let sampler = ForcingSampler::sampled(0.0, h, fields);
        let next = evolve_nodes(&sampler)?;
        differences.push(trajectory_distance(&next, prev, config.alpha, h)?);
        iterates.push(next);
    }

    let ratios: Vec<f64> = differences
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let diverged = ratios.len() >= 2 && ratios[ratios.len() - 1] > 1.0 && ratios[ratios.len() - 2] > 1.0;
    Ok(DuhamelReport {
        node_times,
        iterates,
        differences,
        ratios,
        diverged,
    })
}

/// `max_i ‖ξa_i - ξb_i‖_𝓔 + (Σ trapezoid sup|u_a-u_b|⁴ h)^{1/4}`.
fn trajectory_distance(
    a: &[StateVector],
    b: &[StateVector],
    alpha: f64,
    h: f64,
) -> Result<f64> {
    let mut c_part = 0.0_f64;
    let mut l4_acc = 0.0;
    let m = a.len() - 1;
    for i in 0..=m {
        let diff = a[i].sub(&b[i]);
        c_part = c_part.max(crate::spectral::energy_norm(&diff, alpha)?);
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        l4_acc += w * diff.u.sup_norm().powi(4);
    }
    Ok(c_part + (l4_acc * h).powf(0.25))
}

/// Closed-form solution of the zero-mode ODE `ū'' + ū' + αū = 0`.
///
/// On the torus the spatial mean decouples exactly (Δ annihilates constants);
/// the mean-zero policy discards precisely this damped oscillator, which is
/// exposed here for documentation and testing.
pub fn zero_mode_solution(u0_mean: f64, v0_mean: f64, alpha: f64, t: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    let prop = ChoModePropagator { q: alpha };
    let e = prop.entries(t);
    Ok((
        e[0] * u0_mean + e[1] * v0_mean,
        e[2] * u0_mean + e[3] * v0_mean,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{energy_norm, Grid, SpectralField, StateVector};
    use std::sync::Arc;

    fn grid16() -> Arc<Grid> {
        Grid::new(2.0 * std::f64::consts::PI, 16).unwrap()
    }

    fn sample_state(grid: &Arc<Grid>) -> StateVector {
        let u = SpectralField::from_modes(
            grid.clone(),
            &[
                ([1, 0, 0], Complex64::new(0.4, 0.0)),
                ([0, 2, 1], Complex64::new(0.1, -0.05)),
            ],
        );
        let v = SpectralField::from_modes(grid.clone(), &[([1, 1, 0], Complex64::new(0.0, 0.15))]);
        StateVector::new(u, v, 0.0).unwrap()
    }

    #[test]
    fn zero_nonlinearity_matches_exact_linear_propagator() {
        let grid = grid16();
        let xi0 = sample_state(&grid);
        for scheme in [Scheme::Etd1, Scheme::Etd2Midpoint] {
            let config =
                SolverConfig::new(0.05, scheme, 1.0, SpectralField::zeros(grid.clone())).unwrap();
            let stepped = step(&xi0, &config, &NonlinearitySpec::zero()).unwrap();
            let exact = lin_cho_evolve(&xi0, 0.05, 1.0, None).unwrap();
            let diff = stepped.sub(&exact);
            let scale = energy_norm(&exact, 1.0).unwrap();
            assert!(
                energy_norm(&diff, 1.0).unwrap() < 1e-10 * scale,
                "{scheme:?} deviates from the exact propagator"
            );
        }
    }

    #[test]
    fn constant_forcing_is_integrated_exactly() {
        // with f ≡ 0 and g ≠ 0 the ETD weight Φ₁ is the exact Duhamel
        // integral of a constant forcing, so one step must match the exact
        // solution built from a fine Simpson quadrature of the same problem
        let grid = grid16();
        let xi0 = sample_state(&grid);
        let g = SpectralField::from_modes(grid.clone(), &[([1, 0, 0], Complex64::new(0.2, 0.0))]);
        let config = SolverConfig::new(0.25, Scheme::Etd1, 1.0, g.clone()).unwrap();
        let stepped = step(&xi0, &config, &NonlinearitySpec::zero()).unwrap();
        let forcing = ForcingSampler::constant(g.scaled(-1.0), 1e-3);
        let exact = lin_cho_evolve(&xi0, 0.25, 1.0, Some(&forcing)).unwrap();
        let diff = stepped.sub(&exact);
        assert!(energy_norm(&diff, 1.0).unwrap() < 1e-10);
    }

    #[test]
    fn richardson_self_convergence_matches_scheme_order() {
        let grid = grid16();
        let xi0 = sample_state(&grid);
        let g = SpectralField::zeros(grid.clone());
        let spec = NonlinearitySpec::cubic();
        for scheme in [Scheme::Etd1, Scheme::Etd2Midpoint] {
            let defect = |dt: f64| -> f64 {
                let coarse_cfg = SolverConfig::new(dt, scheme, 1.0, g.clone()).unwrap();
                let fine_cfg = SolverConfig::new(dt / 4.0, scheme, 1.0, g.clone()).unwrap();
                let coarse = step(&xi0, &coarse_cfg, &spec).unwrap();
                let mut reference = xi0.clone();
                for _ in 0..4 {
                    reference = step(&reference, &fine_cfg, &spec).unwrap();
                }
                energy_norm(&coarse.sub(&reference), 1.0).unwrap()
            };
            let d1 = defect(0.08);
            let d2 = defect(0.04);
            let p = scheme.order() as f64;
            let expect = 2.0_f64.powf(p);
            let ratio = d1 / d2;
            assert!(
                ratio > expect / 1.15 && ratio < expect * 1.15,
                "{scheme:?}: defect ratio {ratio}, expected about {expect}"
            );
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        // choose a smooth u*, set g := f(u*) - Δu* - αΔ⁻¹u*; then (u*, 0) is
        // an equilibrium and both schemes must hold it to scheme tolerance
        let grid = grid16();
        let alpha = 1.0;
        let u_star = SpectralField::from_modes(
            grid.clone(),
            &[
                ([1, 0, 0], Complex64::new(0.3, 0.0)),
                ([0, 1, 1], Complex64::new(0.1, 0.05)),
            ],
        );
        let spec = NonlinearitySpec::cubic();
        let f_star = crate::dynamics::f_apply(&u_star, &spec).unwrap();
        let mut g = f_star.clone();
        g.axpy(-1.0, &u_star.laplacian());
        g.axpy(-alpha, &u_star.inverse_laplacian().unwrap());
        g.remove_mean();
        let xi_star =
            StateVector::new(u_star.clone(), SpectralField::zeros(grid.clone()), 0.0).unwrap();
        for scheme in [Scheme::Etd1, Scheme::Etd2Midpoint] {
            let config = SolverConfig::new(0.05, scheme, alpha, g.clone()).unwrap();
            let next = step(&xi_star, &config, &spec).unwrap();
            let drift = energy_norm(&next.sub(&xi_star), alpha).unwrap();
            let scale = energy_norm(&xi_star, alpha).unwrap();
            assert!(
                drift < 1e-12 * scale,
                "{scheme:?}: equilibrium drift {drift}"
            );
        }
    }

    #[test]
    fn evolve_t_equals_dt_is_a_single_step() {
        let grid = grid16();
        let xi0 = sample_state(&grid);
        let config =
            SolverConfig::new(0.05, Scheme::Etd2Midpoint, 1.0, SpectralField::zeros(grid.clone()))
                .unwrap();
        let spec = NonlinearitySpec::cubic();
        let traj = evolve(&xi0, 0.05, &config, &spec, &mut []).unwrap();
        assert_eq!(traj.len(), 2);
        let single = step(&xi0, &config, &spec).unwrap();
        let diff = traj.final_state.sub(&single);
        assert_eq!(energy_norm(&diff, 1.0).unwrap(), 0.0);
        assert!(evolve(&xi0, 0.01, &config, &spec, &mut []).is_err());
    }

    #[test]
    fn small_data_decays_without_forcing() {
        let grid = grid16();
        let xi0 = sample_state(&grid);
        let config =
            SolverConfig::new(0.05, Scheme::Etd2Midpoint, 1.0, SpectralField::zeros(grid.clone()))
                .unwrap();
        let traj = evolve(&xi0, 5.0, &config, &NonlinearitySpec::cubic(), &mut []).unwrap();
        let first = traj.energy_norm(0);
        let last = traj.energy_norm(traj.len() - 1);
        assert!(last < first, "no decay: {first} -> {last}");
    }

    #[test]
    fn restart_is_bit_exact() {
        let grid = grid16();
        let xi0 = sample_state(&grid);
        let mut config =
            SolverConfig::new(0.05, Scheme::Etd2Midpoint, 1.0, SpectralField::zeros(grid.clone()))
                .unwrap();
        config.snapshot_every = 4;
        let spec = NonlinearitySpec::cubic();
        let full = evolve(&xi0, 2.0, &config, &spec, &mut []).unwrap();
        let half = evolve(&xi0, 1.0, &config, &spec, &mut []).unwrap();
        let resumed = evolve(&half.final_state, 1.0, &config, &spec, &mut []).unwrap();
        for (a, b) in full
            .final_state
            .u
            .coeffs()
            .iter()
            .zip(resumed.final_state.u.coeffs().iter())
        {
            assert_eq!(a, b, "u coefficients drifted across restart");
        }
        for (a, b) in full
            .final_state
            .v
            .coeffs()
            .iter()
            .zip(resumed.final_state.v.coeffs().iter())
        {
            assert_eq!(a, b, "v coefficients drifted across restart");
        }
    }

    #[test]
    fn observers_fire_at_snapshots() {
        let grid = grid16();
        let xi0 = sample_state(&grid);
        let mut config =
            SolverConfig::new(0.05, Scheme::Etd1, 1.0, SpectralField::zeros(grid.clone())).unwrap();
        config.snapshot_every = 2;
        let mut seen = Vec::new();
        {
            let mut watcher = |st: &StateVector| seen.push(st.time);
            let mut obs: [&mut dyn FnMut(&StateVector); 1] = [&mut watcher];
            evolve(&xi0, 0.4, &config, &NonlinearitySpec::zero(), &mut obs).unwrap();
        }
        assert_eq!(seen.len(), 5); // t = 0, 0.1, 0.2, 0.3, 0.4
        assert!((seen[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn duhamel_zero_nonlinearity_has_zero_differences() {
        let grid = grid16();
        let xi0 = sample_state(&grid);
        let g = SpectralField::from_modes(grid.clone(), &[([1, 0, 0], Complex64::new(0.1, 0.0))]);
        let config = SolverConfig::new(0.01, Scheme::Etd1, 1.0, g).unwrap();
        let report = duhamel_iterate(&xi0, 0.05, 3, &config, &NonlinearitySpec::zero()).unwrap();
        let scale = energy_norm(&xi0, 1.0).unwrap();
        for d in &report.differences {
            assert!(*d < 1e-12 * scale, "difference {d} should vanish for f = 0");
        }
        assert!(!report.diverged);
    }

    #[test]
    fn duhamel_contracts_for_small_tau_and_grows_with_tau() {
        let grid = grid16();
        let xi0 = sample_state(&grid);
        let config =
            SolverConfig::new(0.01, Scheme::Etd1, 1.0, SpectralField::zeros(grid.clone())).unwrap();
        let spec = NonlinearitySpec::cubic();
        let small = duhamel_iterate(&xi0, 0.05, 5, &config, &spec).unwrap();
        for r in &small.ratios {
            assert!(*r < 1.0, "expected contraction, ratio {r}");
        }
        let doubled = duhamel_iterate(&xi0, 0.1, 5, &config, &spec).unwrap();
        assert!(
            doubled.ratios[0] > small.ratios[0],
            "doubling tau should weaken the contraction: {} vs {}",
            doubled.ratios[0],
            small.ratios[0]
        );
        assert!(duhamel_iterate(&xi0, 0.05, 1, &config, &spec).is_err());
    }

    #[test]
    fn zero_mode_critical_damping() {
        // α = 1/4 has a double root at -1/2: ū(t) = (1 + t/2)e^{-t/2}
        for &t in &[0.0, 0.5, 1.0, 3.0, 10.0] {
            let (u, _v) = zero_mode_solution(1.0, 0.0, 0.25, t).unwrap();
            let want = (1.0 + 0.5 * t) * (-0.5 * t).exp();
            assert!((u - want).abs() < 1e-13, "t={t}: {u} vs {want}");
        }
        let (u, v) = zero_mode_solution(0.0, 0.0, 1.0, 4.2).unwrap();
        assert_eq!((u, v), (0.0, 0.0));
        assert!(zero_mode_solution(1.0, 0.0, 0.0, 1.0).is_err());
    }
}
