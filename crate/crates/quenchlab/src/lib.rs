//! Numerical laboratory for finite-time touchdown in the parabolic MEMS
//! model `u_t - Lap(u) = f(x) (1 - u)^{-p}` with zero boundary and initial
//! data.
//!
//! The crate provides, in order of dependency:
//!
//! * [`domain`] — interval and radial-ball grids with the discrete Laplacian;
//! * [`profile`] — permittivity profiles `f`, eigenvalue/threshold constants,
//!   norms and floor checks;
//! * [`solver`] — the adaptive semi-implicit integrator and touchdown-time
//!   extrapolation;
//! * [`analysis`] — touchdown-time bounds, touchdown-set detection, rate
//!   diagnostics, harmonic barriers and no-touchdown certificates;
//! * [`experiments`] — stability sweeps under profile perturbations and
//!   bisection for the critical plateau height of a competing-bump family;
//! * [`verify`] — a built-in invariant suite over all of the above.

pub mod analysis;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod profile;
pub mod solver;
pub mod verify;

pub use analysis::{
    detect_touchdown_set, empirical_type_i_gamma, harmonic_barrier, lower_bound_touchdown_time,
    monitor_j, no_touchdown_certificate, rate_exponent_fit, search_barrier_epsilon,
    upper_bound_touchdown_time, Barrier, Certificate, MonitorReport, Region, TouchdownSet,
    J_MIN_TOLERANCE, KAPPA_TD_DEFAULT,
};
pub use domain::{build_grid, unit_sphere_area, Domain, Grid};
pub use error::{Error, Result};
pub use experiments::{
    bisect_critical_height, hausdorff_semidistance, perturbation_sweep, BisectionProbe,
    BisectionResult, SweepResult, SweepRow,
};
pub use profile::{
    lq_distance, make_convex, make_m_shaped, make_one_well, make_two_annulus, make_two_bump,
    principal_eigenvalue, profile_floor_check, quench_threshold, FloorCheck, FloorRegion, Profile,
    ProfileFamily, TwoAnnulusGeometry,
};
pub use solver::{
    estimate_touchdown_time, ode_quench_solution, ode_touchdown_time, solve, step, Snapshot,
    SolverConfig, StepRecord, Termination, TouchdownEstimate, Trajectory,
};
pub use verify::{run_all_checks, CheckResult};
