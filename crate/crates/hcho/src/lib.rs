//! Pseudospectral laboratory for the hyperbolic Cahn-Hilliard-Oono equation
//!
//! ```text
//!   u_tt + u_t + Δ(Δu - f(u) + g) + αu = 0,   α > 0,
//! ```
//! discretized on a periodic box `[0,L)³` with Fourier collocation. The crate
//! provides exact mode-wise linear propagators (Schrödinger, plate, linear
//! CHO), exponential time-stepping for the nonlinear flow, the energy and
//! Lyapunov functionals that govern dissipation, windowed `L⁴(t,t+1;L^∞)`
//! space-time norms, a Duhamel fixed-point local solver, and desk-scale
//! attractor experiments (absorbing balls, post-burn-in regularity probes,
//! parameter sweeps).
//!
//! All evolved fields are mean-zero: the homogeneous `Ḣ⁻¹` norm is undefined
//! for a nonzero-mean torus field, so means are removed at ingestion and the
//! exact zero-mode ODE is exposed separately as [`dynamics::zero_mode_solution`].
//!
//! Entry points: [`spectral`] for fields and norms, [`propagators`] for the
//! linear flows, [`dynamics`] for the nonlinear solver, [`diagnostics`] for
//! functionals and fits, [`experiments`] for composite studies, and
//! [`interface`] for the CLI drivers, run configs, tables and checkpoints.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod interface;
pub mod propagators;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{
    energy_norm, forward_transform, inverse_transform, Grid, PhysicalField, SpectralField,
    StateVector,
};

/// Cap rayon's global pool from `HCHO_THREADS` if the variable is set.
///
/// Called by the CLI and by experiment drivers; a failure to install the pool
/// (already initialized) is ignored so library users keep their own settings.
pub fn init_thread_cap() {
    use std::sync::OnceLock;
    static INIT: OnceLock<()> = OnceLock::new();
    INIT.get_or_init(|| {
        if let Ok(v) = std::env::var("HCHO_THREADS") {
            if let Ok(n) = v.trim().parse::<usize>() {
                if n > 0 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    });
}
