//! The full nonlinear hyperbolic CHO evolution: the admissible nonlinearity
//! family, the exponential time-stepper built on the exact per-mode linear
//! propagators, the Duhamel fixed-point local solver, and the exact zero-mode
//! diagnostic.

mod nonlinearity;
mod solver;

pub use nonlinearity::{
    f_apply, f_apply_detailed, verify_structural_conditions, ConditionReport, FApplied,
    NonlinearitySpec, StructuralReport,
};
pub(crate) use solver::potential_and_sup;
pub use solver::{
    duhamel_iterate, evolve, step, zero_mode_solution, DuhamelReport, ScalarSeries, Scheme,
    SolverConfig, Trajectory,
};
