//! Desk-scale composite experiments: absorbing-ball ensembles, attractor
//! sampling with second-energy-space probes, grid-refinement regularity
//! studies, and parameter sweeps.
//!
//! Everything is seeded and deterministic: random fields derive each mode's
//! Gaussian draw from a hash of (seed, mode triple), so the same seed yields
//! the same physical field on every grid resolution that contains the band.

use crate::diagnostics::{fit_decay_rate, strichartz_window_norm};
use crate::dynamics::{evolve, NonlinearitySpec, SolverConfig, Trajectory};
use crate::error::{Error, Result};
use crate::spectral::{energy_norm, Grid, SpectralField, StateVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::sync::Arc;

/// Fraction of the trailing snapshots used for plateau estimates.
const PLATEAU_FRACTION: f64 = 0.25;
/// Safety factor between the observed plateau and the reported ball radius.
const BALL_SAFETY: f64 = 2.0;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn mode_rng(seed: u64, m: [i64; 3], stream: u64) -> ChaCha12Rng {
    let mut s = seed ^ stream.wrapping_mul(0xa076_1d64_78bd_642f);
    for &a in &m {
        s ^= splitmix64(&mut s) ^ (a as u64).wrapping_mul(0xe703_7ed1_a0b4_28db);
    }
    ChaCha12Rng::seed_from_u64(splitmix64(&mut s))
}

fn is_canonical(m: [i64; 3]) -> bool {
    // exactly one representative of each ±m pair
    m > [-m[0], -m[1], -m[2]]
}

/// Seeded real Gaussian field: coefficients `(g₁+ig₂)·|k|^{-r}` on canonical
/// modes with `|m| ≤ band_max`, mirrored by conjugation, mean-zero.
pub fn random_band_limited_field(
    grid: &Arc<Grid>,
    seed: u64,
    envelope_r: f64,
    band_max: f64,
    stream: u64,
) -> SpectralField {
    let mut field = SpectralField::zeros(grid.clone());
    for idx in 0..grid.len() {
        let m = grid.mode(idx);
        if !is_canonical(m) {
            continue;
        }
        let mag2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
        if mag2.sqrt() > band_max {
            continue;
        }
        let mut rng = mode_rng(seed, m, stream);
        let g1: f64 = rng.sample(rand_distr::StandardNormal);
        let g2: f64 = rng.sample(rand_distr::StandardNormal);
        let k = grid.k2(idx).sqrt();
        let amp = k.powf(-envelope_r);
        let z = Complex64::new(g1 * amp, g2 * amp);
        field.coeffs_mut()[idx] = z;
        field.coeffs_mut()[grid.conjugate_index(idx)] = z.conj();
    }
    field
}

/// A seeded ensemble of band-limited random initial states with prescribed
/// energy-norm targets spread over `norm_range`.
#[derive(Clone, Debug)]
pub struct EnsembleSpec {
    pub count: usize,
    pub seed: u64,
    pub norm_range: (f64, f64),
    pub envelope_r: f64,
    pub band_max: f64,
}

impl EnsembleSpec {
    pub fn new(count: usize, seed: u64, norm_range: (f64, f64)) -> Self {
        EnsembleSpec {
            count,
            seed,
            norm_range,
            envelope_r: 3.0,
            band_max: 0.0, // resolved against the grid at generation time
        }
    }

    /// Generate the members; each row is (member seed, target norm, state).
    pub fn generate(&self, grid: &Arc<Grid>, alpha: f64) -> Result<Vec<EnsembleMember>> {
        if self.count == 0 {
            return Err(Error::Parameter("ensemble must have at least one member".into()));
        }
        let (lo, hi) = self.norm_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Parameter(format!(
                "norm range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"
            )));
        }
        let band = if self.band_max > 0.0 {
            self.band_max
        } else {
            (grid.n() / 4) as f64
        };
        let mut members = Vec::with_capacity(self.count);
        for i in 0..self.count {
            let member_seed = self.seed.wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(i as u64 + 1));
            let target = if self.count == 1 {
                lo
            } else {
                lo + (hi - lo) * i as f64 / (self.count - 1) as f64
            };
            let u = random_band_limited_field(grid, member_seed, self.envelope_r, band, 1);
            let v = random_band_limited_field(grid, member_seed, self.envelope_r, band, 2);
            let raw = StateVector::new(u, v, 0.0)?;
            let norm = energy_norm(&raw, alpha)?;
            if norm == 0.0 {
                return Err(Error::Config("generated member has zero norm".into()));
            }
            let state = raw.scaled(target / norm);
            members.push(EnsembleMember {
                index: i,
                seed: member_seed,
                target_norm: target,
                state,
            });
        }
        Ok(members)
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleMember {
    pub index: usize,
    pub seed: u64,
    pub target_norm: f64,
    pub state: StateVector,
}

#[derive(Clone, Debug)]
pub struct BallMemberRow {
    pub index: usize,
    pub seed: u64,
    pub initial_norm: f64,
    /// First snapshot time after which the energy norm stays within the ball.
    pub entry_time: f64,
    /// Max energy norm observed after entry (must stay ≤ the radius).
    pub max_after_entry: f64,
    pub stayed_inside: bool,
    /// Trailing-window plateau of this member's energy norm.
    pub plateau: f64,
    /// Total horizon actually simulated (extensions included).
    pub horizon: f64,
}

#[derive(Clone, Debug)]
pub struct AbsorbingBallReport {
    pub members: Vec<BallMemberRow>,
    /// 2× the reference run's trailing plateau.
    pub reference_radius: f64,
    /// 2× the worst member plateau: the ensemble's own radius estimate.
    pub ensemble_radius: f64,
    pub all_absorbed: bool,
    pub max_entry_time: f64,
}

fn trailing_plateau(traj: &Trajectory) -> f64 {
    let len = traj.len();
    let start = ((len as f64) * (1.0 - PLATEAU_FRACTION)) as usize;
    (start..len)
        .map(|i| traj.energy_norm(i))
        .fold(0.0_f64, f64::max)
}

/// Evolve one member, extending the horizon (up to `max_extensions`
/// doublings) until its energy plateau is reached.
fn evolve_member(
    state: &StateVector,
    t_final: f64,
    config: &SolverConfig,
    spec: &NonlinearitySpec,
    radius: f64,
    max_extensions: usize,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut run_config = config.clone();
    run_config.keep_states = false;
    let mut times = Vec::new();
    let mut energies = Vec::new();
    let mut current = state.clone();
    let mut horizon = 0.0;
    let mut segment = t_final;
    for ext in 0..=max_extensions {
        let traj = evolve(&current, segment, &run_config, spec, &mut [])?;
        let skip = usize::from(ext > 0); // shared snapshot at the seam
        for i in skip..traj.len() {
            times.push(traj.times[i]);
            energies.push(traj.energy_norm(i));
        }
        horizon = *times.last().unwrap();
        current = traj.final_state.clone();
        if *energies.last().unwrap() <= radius {
            break;
        }
        segment = horizon; // double the total horizon
    }
    Ok((times, energies, horizon))
}

/// Dissipative absorbing-ball experiment: every member must enter the
/// reference ball and stay there; member blow-up fails the experiment with
/// that member's diagnostics attached.
pub fn absorbing_ball_experiment(
    grid: &Arc<Grid>,
    config: &SolverConfig,
    spec: &NonlinearitySpec,
    ensemble: &EnsembleSpec,
    t_final: f64,
) -> Result<AbsorbingBallReport> {
    let members = ensemble.generate(grid, config.alpha)?;

    // reference run from a unit-norm datum fixes the ball radius
    let reference = EnsembleSpec {
        count: 1,
        seed: ensemble.seed ^ 0x5eed_0f0f_0000_0001,
        norm_range: (1.0, 1.0),
        ..ensemble.clone()
    }
    .generate(grid, config.alpha)?
    .remove(0);
    let mut ref_config = config.clone();
    ref_config.keep_states = false;
    let ref_traj = evolve(&reference.state, t_final, &ref_config, spec, &mut [])?;
    let reference_radius = BALL_SAFETY * trailing_plateau(&ref_traj);

    let rows: Vec<Result<BallMemberRow>> = members
        .par_iter()
        .map(|member| {
            let (times, energies, horizon) = evolve_member(
                &member.state,
                t_final,
                config,
                spec,
                reference_radius,
                2,
            )?;
            // last index still outside the ball
            let mut entry_idx = 0usize;
            for (i, &e) in energies.iter().enumerate() {
                if e > reference_radius {
                    entry_idx = i + 1;
                }
            }
            let stayed = entry_idx < energies.len();
            let entry_time = if stayed {
                times[entry_idx]
            } else {
                f64::INFINITY
            };
            let max_after = if stayed {
                energies[entry_idx..].iter().fold(0.0_f64, |m, &e| m.max(e))
            } else {
                f64::NAN
            };
            let plateau = {
                let start = ((energies.len() as f64) * (1.0 - PLATEAU_FRACTION)) as usize;
                energies[start..].iter().fold(0.0_f64, |m, &e| m.max(e))
            };
            Ok(BallMemberRow {
                index: member.index,
                seed: member.seed,
                initial_norm: energies[0],
                entry_time,
                max_after_entry: max_after,
                stayed_inside: stayed,
                plateau,
                horizon,
            })
        })
        .collect();
    let mut members_out = Vec::with_capacity(rows.len());
    for row in rows {
        members_out.push(row?);
    }
    let ensemble_radius = BALL_SAFETY
        * members_out
            .iter()
            .map(|r| r.plateau)
            .fold(0.0_f64, f64::max);
    let all_absorbed = members_out.iter().all(|r| r.stayed_inside);
    let max_entry_time = members_out
        .iter()
        .map(|r| r.entry_time)
        .fold(0.0_f64, f64::max);
    Ok(AbsorbingBallReport {
        members: members_out,
        reference_radius,
        ensemble_radius,
        all_absorbed,
        max_entry_time,
    })
}

#[derive(Clone, Debug)]
pub struct SampleRow {
    pub time: f64,
    pub energy_norm: f64,
    pub e2_norm: f64,
}

/// States harvested after burn-in, with their norms and pairwise distances.
#[derive(Clone, Debug)]
pub struct AttractorSample {
    pub burn_in: f64,
    pub states: Vec<StateVector>,
    pub samples: Vec<SampleRow>,
    /// The same probe repeated after doubling the burn-in.
    pub doubled_samples: Vec<SampleRow>,
    pub max_e2: f64,
    pub max_e2_doubled: f64,
    /// |max₂ - max₁| / max(max₁, tiny): the burn-in stability indicator.
    pub e2_change: f64,
    /// Pairwise energy distances between the first-pass samples.
    pub pairwise_energy_distances: Vec<f64>,
    /// Decay rate fitted on the burn-in segment.
    pub beta_fit: Option<f64>,
    /// Whether burn_in ≥ 5/β for the fitted β.
    pub burn_in_sufficient: bool,
}

/// Harvest `samples` states spaced by `spacing` after `burn_in`, then repeat
/// after continuing to twice the burn-in, sharing the common prefix.
pub fn attractor_sample(
    grid: &Arc<Grid>,
    config: &SolverConfig,
    spec: &NonlinearitySpec,
    init: &StateVector,
    burn_in: f64,
    samples: usize,
    spacing: f64,
) -> Result<AttractorSample> {
    if samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    if !(burn_in > 0.0 && spacing > 0.0) {
        return Err(Error::Parameter(
            "burn-in and spacing must be positive".into(),
        ));
    }
    let _ = grid;
    let mut burn_config = config.clone();
    burn_config.keep_states = false;

    let burn1 = evolve(init, burn_in, &burn_config, spec, &mut [])?;
    let beta_fit = fit_decay_rate(&burn1.times, &burn1.energy_series(), 0.5)
        .ok()
        .map(|f| f.beta);
    let burn_in_sufficient = beta_fit.map(|b| b > 0.0 && burn_in >= 5.0 / b).unwrap_or(false);

    let harvest = |start: &StateVector| -> Result<(Vec<StateVector>, Vec<SampleRow>, StateVector)> {
        let mut sample_config = config.clone();
        sample_config.keep_states = true;
        sample_config.snapshot_every =
            ((spacing / config.dt).round() as usize).max(1);
        let traj = evolve(
            start,
            spacing * samples as f64,
            &sample_config,
            spec,
            &mut [],
        )?;
        let mut states = Vec::with_capacity(samples);
        let mut rows = Vec::with_capacity(samples);
        for i in 1..traj.len() {
            states.push(traj.states[i].clone());
            rows.push(SampleRow {
                time: traj.times[i],
                energy_norm: traj.energy_norm(i),
                e2_norm: traj.e2_norm(i),
            });
        }
        Ok((states, rows, traj.final_state))
    };

    let (states, rows, after_first) = harvest(&burn1.final_state)?;

    // continue to the doubled burn-in, reusing everything already simulated
    let elapsed = burn_in + spacing * samples as f64;
    let remaining = 2.0 * burn_in - elapsed;
    let resumed = if remaining >= config.dt {
        evolve(&after_first, remaining, &burn_config, spec, &mut [])?.final_state
    } else {
        after_first
    };
    let (_, doubled_rows, _) = harvest(&resumed)?;

    let max_e2 = rows.iter().map(|r| r.e2_norm).fold(0.0_f64, f64::max);
    let max_e2_doubled = doubled_rows
        .iter()
        .map(|r| r.e2_norm)
        .fold(0.0_f64, f64::max);
    let e2_change = (max_e2_doubled - max_e2).abs() / max_e2.max(1e-300);
    let mut pairwise = Vec::new();
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            pairwise.push(energy_norm(&states[i].sub(&states[j]), config.alpha)?);
        }
    }
    Ok(AttractorSample {
        burn_in,
        states,
        samples: rows,
        doubled_samples: doubled_rows,
        max_e2,
        max_e2_doubled,
        e2_change,
        pairwise_energy_distances: pairwise,
        beta_fit,
        burn_in_sufficient,
    })
}

#[derive(Clone, Debug)]
pub struct RefinementRow {
    pub resolution: usize,
    pub max_e2: f64,
    pub final_energy: f64,
}

#[derive(Clone, Debug)]
pub struct RefinementStudy {
    pub rows: Vec<RefinementRow>,
    /// True when some consecutive pair grows by more than a factor 2.
    pub non_convergent: bool,
}

/// Re-run the same physical setup (identical seeded band-limited data and
/// forcing) across grid resolutions and compare post-burn-in 𝓔₂ norms.
#[allow(clippy::too_many_arguments)]
pub fn regularity_refinement_study(
    box_length: f64,
    resolutions: &[usize],
    seed: u64,
    init_norm: f64,
    g_modes: &[([i64; 3], Complex64)],
    template: &SolverConfig,
    spec: &NonlinearitySpec,
    burn_in: f64,
    samples: usize,
    spacing: f64,
) -> Result<RefinementStudy> {
    if resolutions.windows(2).any(|w| w[0] >= w[1]) || resolutions.is_empty() {
        return Err(Error::Parameter(
            "resolutions must be nonempty and strictly increasing".into(),
        ));
    }
    let band = (resolutions[0] / 4) as f64;
    let rows: Vec<Result<RefinementRow>> = resolutions
        .par_iter()
        .map(|&n| {
            let grid = Grid::new(box_length, n)?;
            let g = SpectralField::from_modes(grid.clone(), g_modes);
            let mut config = template.clone();
            config.alpha = template.alpha;
            config.g = g;
            config.keep_states = false;
            let u = random_band_limited_field(&grid, seed, 3.0, band, 1);
            let v = random_band_limited_field(&grid, seed, 3.0, band, 2);
            let raw = StateVector::new(u, v, 0.0)?;
            let norm = energy_norm(&raw, config.alpha)?;
            let init = raw.scaled(init_norm / norm);
            let sample = attractor_sample(
                &grid,
                &config,
                spec,
                &init,
                burn_in,
                samples,
                spacing,
            )?;
            Ok(RefinementRow {
                resolution: n,
                max_e2: sample.max_e2,
                final_energy: sample
                    .samples
                    .last()
                    .map(|r| r.energy_norm)
                    .unwrap_or(f64::NAN),
            })
        })
        .collect();
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        out.push(row?);
    }
    let non_convergent = out
        .windows(2)
        .any(|w| w[1].max_e2 > 2.0 * w[0].max_e2.max(1e-300));
    Ok(RefinementStudy {
        rows: out,
        non_convergent,
    })
}

/// One sweep cell: the physical and numerical parameters of a single run.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub alpha: f64,
    pub kappa: f64,
    pub g_amplitude: f64,
    pub box_length: f64,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub init_norm: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub cell: SweepCell,
    pub status: String,
    pub beta_fit: f64,
    pub ball_radius: f64,
    pub max_strichartz_window: f64,
    pub final_energy: f64,
}

/// Run one sweep cell through the same evolve + diagnostics path as a direct
/// run; failures land in the row's status instead of aborting the sweep.
pub fn sweep_cell_run(cell: &SweepCell, spec_template: &NonlinearitySpec) -> SweepRow {
    let mut row = SweepRow {
        cell: cell.clone(),
        status: "ok".to_string(),
        beta_fit: f64::NAN,
        ball_radius: f64::NAN,
        max_strichartz_window: f64::NAN,
        final_energy: f64::NAN,
    };
    let result = (|| -> Result<()> {
        let grid = Grid::new(cell.box_length, cell.n)?;
        let mut spec = spec_template.clone();
        spec.kappa = cell.kappa;
        let mut g = random_band_limited_field(&grid, cell.seed ^ 0x6f0c, 3.0, (cell.n / 4) as f64, 3);
        if cell.g_amplitude == 0.0 {
            g = SpectralField::zeros(grid.clone());
        } else {
            let h1 = g.sobolev_norm(1.0)?;
            g.scale(cell.g_amplitude / h1);
        }
        let mut config = SolverConfig::new(cell.dt, crate::dynamics::Scheme::Etd2Midpoint, cell.alpha, g)?;
        config.keep_states = false;
        config.snapshot_every = ((0.25 / cell.dt).round() as usize).max(1);
        let u = random_band_limited_field(&grid, cell.seed, 3.0, (cell.n / 4) as f64, 1);
        let v = random_band_limited_field(&grid, cell.seed, 3.0, (cell.n / 4) as f64, 2);
        let raw = StateVector::new(u, v, 0.0)?;
        let norm = energy_norm(&raw, cell.alpha)?;
        let init = raw.scaled(cell.init_norm / norm);
        let traj = evolve(&init, cell.t_final, &config, &spec, &mut [])?;
        row.beta_fit = fit_decay_rate(&traj.times, &traj.energy_series(), 0.5)
            .map(|f| f.beta)
            .unwrap_or(f64::NAN);
        row.ball_radius = BALL_SAFETY * trailing_plateau(&traj);
        let window = 1.0;
        let mut max_win = f64::NAN;
        for (i, &t) in traj.times.iter().enumerate() {
            let _ = i;
            if t - traj.times[0] >= window {
                let w = strichartz_window_norm(&traj, t - window, window)?;
                max_win = if max_win.is_nan() { w } else { max_win.max(w) };
            }
        }
        row.max_strichartz_window = max_win;
        row.final_energy = traj.energy_norm(traj.len() - 1);
        Ok(())
    })();
    if let Err(e) = result {
        row.status = format!("failed: {e}");
    }
    row
}

/// Cartesian sweep over the four parameter axes, each cell a full run with
/// fitted β, ball radius, and max windowed Strichartz norm.
#[allow(clippy::too_many_arguments)]
pub fn parameter_sweep(
    alphas: &[f64],
    kappas: &[f64],
    g_amplitudes: &[f64],
    box_lengths: &[f64],
    n: usize,
    dt: f64,
    t_final: f64,
    seed: u64,
    init_norm: f64,
    budget: usize,
    spec_template: &NonlinearitySpec,
) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() || kappas.is_empty() || g_amplitudes.is_empty() || box_lengths.is_empty()
    {
        return Err(Error::Parameter("every sweep axis must be nonempty".into()));
    }
    let total = alphas.len() * kappas.len() * g_amplitudes.len() * box_lengths.len();
    if total > budget {
        return Err(Error::Parameter(format!(
            "sweep of {total} cells exceeds budget {budget}"
        )));
    }
    let mut cells = Vec::with_capacity(total);
    for &alpha in alphas {
        for &kappa in kappas {
            for &g_amp in g_amplitudes {
                for &box_length in box_lengths {
                    cells.push(SweepCell {
                        alpha,
                        kappa,
                        g_amplitude: g_amp,
                        box_length,
                        n,
                        dt,
                        t_final,
                        seed,
                        init_norm,
                    });
                }
            }
        }
    }
    Ok(cells
        .par_iter()
        .map(|cell| sweep_cell_run(cell, spec_template))
        .collect())
}
