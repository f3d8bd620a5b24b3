//! Simulation and diagnostics for Tikhonov-regularized inertial multiobjective
//! gradient systems.
//!
//! The crate integrates
//!
//! ```text
//! (α/t^q) ẋ + proj_{C(x) + β/t^p x + ẍ}(0) = 0,    C(x) = conv{∇f_i(x)}
//! ```
//!
//! (`β = 0, q = 1` gives the unregularized system with asymptotic vanishing
//! damping), evaluates merit functions, traces the regularization path and
//! checks the energy and rate inequalities along computed trajectories.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod params;
pub mod problem;
pub mod problems;
pub mod scalarization;
pub mod simplex_qp;

pub use diagnostics::{
    default_window, energy_e, energy_e_strided, energy_w, final_distance, fit_rate, limit_values,
    monitor_inequalities, monitor_inequalities_with, path_distance, velocity_integral, Anchor,
    EnergySpec, GammaChoice, LimitEstimate, MonitorConfig, MonitorReport, RateFit, Series,
    SlackSummary, XiChoice,
};
pub use dynamics::{di_rhs, integrate, step, RhsEval, StepFlags, Trajectory};
pub use error::{Error, Result};
pub use params::{
    level_offset, level_set_membership, validate_params, DynParams, LevelOffset, State,
    DEFAULT_EPS_TIE, DEFAULT_EPS_V,
};
pub use problem::{FnObjective, Objective, Problem};
pub use scalarization::{
    merit_phi, merit_phi_t, merit_phi_with_radius, regularization_path, regularization_path_tol,
    sample_indices, solve_scalarized, MeritInterval, PathSample, ScalarizationResult,
};
pub use simplex_qp::{min_norm_combination, project_simplex, steepest_direction, SimplexWeights};
