//! End-to-end acceptance suite.  Each criterion prints exactly one
//! PASS/FAIL line with a quantitative detail; the test fails if any
//! criterion does.  All tolerances are pinned here as constants.

use quenchlab::analysis::J_MIN_TOLERANCE;
use quenchlab::{
    bisect_critical_height, build_grid, detect_touchdown_set, empirical_type_i_gamma,
    estimate_touchdown_time, harmonic_barrier, hausdorff_semidistance, lower_bound_touchdown_time,
    make_convex, make_m_shaped, make_two_bump, no_touchdown_certificate, ode_quench_solution,
    ode_touchdown_time, perturbation_sweep, rate_exponent_fit, run_all_checks,
    search_barrier_epsilon, solve, upper_bound_touchdown_time, Domain, Profile, Region, Result,
    SolverConfig, Termination, TouchdownEstimate, TouchdownSet, Trajectory, KAPPA_TD_DEFAULT,
};
use std::time::Instant;

/// Slack factor allowed on the closed-form upper bound for the estimated
/// touchdown time (discretization bias budget).
const UPPER_BOUND_SLACK: f64 = 1.02;
/// Wall-clock budget for the two fine-grid reference runs (criterion 1).
const REFERENCE_RUNTIME_BUDGET_S: f64 = 10.0;
/// Distance tolerance between the diffusion-free run and the exact
/// space-homogeneous solution (criterion 2).
const ODE_MATCH_TOL: f64 = 1e-4;
/// Allowed deviation of the fitted rate exponent from 1/(p+1).
const RATE_EXPONENT_TOL: f64 = 0.05;
/// Allowed relative drift of the empirical type-I constant per grid doubling.
const GAMMA_STABILITY_TOL: f64 = 0.10;
/// The detected touchdown set may span at most this many cells.
const SET_WIDTH_CELLS: f64 = 2.0;
/// Radius (fraction of the domain) containing the touchdown set of convex
/// profiles.
const CONVEX_CONFINEMENT: f64 = 0.05;
/// Relative touchdown-time response allowed for the smallest perturbation.
const SWEEP_DT_FRAC: f64 = 0.02;
/// Touchdown-set response (absolute, domain radius 1) allowed for the
/// smallest perturbation.
const SWEEP_SET_TOL: f64 = 0.05;
/// Relative tolerance (vs. the admissible height range) for the critical
/// plateau height bracket.
const BISECTION_TOL_FRAC: f64 = 1e-3;
/// The touchdown set must jump by at least this fraction of the bump
/// separation across the critical height.
const JUMP_FRACTION: f64 = 0.5;
/// Wall-clock budget for the built-in verification suite (criterion 11).
const VERIFY_RUNTIME_BUDGET_S: f64 = 120.0;

struct Criterion {
    idx: usize,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn criterion(
    idx: usize,
    title: &'static str,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> Criterion {
    let (passed, detail) = match body() {
        Ok((p, d)) => (p, d),
        Err(e) => (false, format!("error: {e}")),
    };
    Criterion {
        idx,
        title,
        passed,
        detail,
    }
}

fn fine_config(p: f64) -> SolverConfig {
    let mut cfg = SolverConfig::new(p).expect("valid exponent");
    cfg.dt_safety = 0.02;
    cfg.dt_init = 2e-4;
    cfg
}

fn constant_run(cells: usize, p: f64, value: f64) -> Result<(Trajectory, TouchdownEstimate)> {
    let grid = build_grid(Domain::Interval { radius: 1.0 }, cells)?;
    let f = Profile::constant(grid, value)?;
    let traj = solve(&f, &fine_config(p), 2.0)?;
    let est = estimate_touchdown_time(&traj)?;
    Ok((traj, est))
}

fn run_and_detect(
    f: &Profile,
    cfg: &SolverConfig,
) -> Result<(Trajectory, TouchdownEstimate, TouchdownSet)> {
    let traj = solve(f, cfg, 2.0)?;
    let est = estimate_touchdown_time(&traj)?;
    let set = detect_touchdown_set(&traj, &est, KAPPA_TD_DEFAULT)?;
    Ok((traj, est, set))
}

#[test]
fn acceptance_criteria() {
    let mut results: Vec<Criterion> = Vec::new();

    // Shared fine-grid reference runs (criteria 1, 3, 4).
    let t_reference = Instant::now();
    let ref_p2 = constant_run(1600, 2.0, 10.0);
    let ref_p1 = constant_run(1600, 1.0, 5.0);
    let reference_seconds = t_reference.elapsed().as_secs_f64();
    let mid_p2 = constant_run(800, 2.0, 10.0);

    results.push(criterion(
        1,
        "estimated touchdown time sandwiched by closed-form bounds",
        || {
            let (traj2, est2) = ref_p2.as_ref().map_err(clone_err)?;
            let (_, est1) = ref_p1.as_ref().map_err(clone_err)?;
            let lo2 = lower_bound_touchdown_time(2.0, &traj2.profile)?;
            let hi2 = upper_bound_touchdown_time(2.0, 1, 10.0, 0.9)?;
            let lo1 = 1.0 / (2.0 * 5.0);
            let hi1 = upper_bound_touchdown_time(1.0, 1, 5.0, 0.9)?;
            let ok2 = lo2 <= est2.t_est && est2.t_est <= UPPER_BOUND_SLACK * hi2;
            let ok1 = lo1 <= est1.t_est && est1.t_est <= UPPER_BOUND_SLACK * hi1;
            let fast = reference_seconds < REFERENCE_RUNTIME_BUDGET_S;
            Ok((
                ok1 && ok2 && fast,
                format!(
                    "p=2: {lo2:.6} <= {:.6} <= {:.6}; p=1: {lo1:.6} <= {:.6} <= {:.6}; \
                     runs took {reference_seconds:.1}s",
                    est2.t_est,
                    UPPER_BOUND_SLACK * hi2,
                    est1.t_est,
                    UPPER_BOUND_SLACK * hi1
                ),
            ))
        },
    ));

    results.push(criterion(
        2,
        "diffusion-free solver reproduces the exact space-homogeneous solution",
        || {
            let (p, c) = (2.0, 10.0);
            let grid = build_grid(Domain::Interval { radius: 1.0 }, 8)?;
            let f = Profile::constant(grid, c)?;
            let mut cfg = SolverConfig::new(p)?;
            cfg.disable_diffusion = true;
            cfg.dt_safety = 1e-4;
            cfg.eps_stop = 1e-3;
            cfg.dt_init = 1.0;
            let traj = solve(&f, &cfg, 1.0)?;
            let t_star = ode_touchdown_time(p, c)?;
            let slope = (p + 1.0) * c;

            // (a) Every recorded step lies within ODE_MATCH_TOL of the exact
            // solution curve, in value or in time.
            let mut worst_curve = 0.0f64;
            // (b) The gap identity (1-u)^{p+1} = 1 - (p+1) c t holds to the
            // same tolerance along the whole run.
            let mut worst_z = 0.0f64;
            for s in &traj.steps {
                let z_num = (1.0 - s.max_u).powf(p + 1.0);
                let z_ode = 1.0 - slope * s.t;
                worst_z = worst_z.max((z_num - z_ode).abs());
                let dt_dist = (s.t - (1.0 - z_num) / slope).abs();
                let du_dist = if s.t < t_star {
                    (s.max_u - ode_quench_solution(p, c, s.t)?).abs()
                } else {
                    f64::INFINITY
                };
                worst_curve = worst_curve.max(dt_dist.min(du_dist));
            }

            // (c) Pointwise match at t = 0.9 * t_star by interpolation.
            let t_probe = 0.9 * t_star;
            let y = ode_quench_solution(p, c, t_probe)?;
            let mut u_probe = f64::NAN;
            for w in traj.steps.windows(2) {
                if w[0].t <= t_probe && t_probe <= w[1].t {
                    let s = (t_probe - w[0].t) / (w[1].t - w[0].t);
                    u_probe = w[0].max_u + s * (w[1].max_u - w[0].max_u);
                }
            }
            let du = (u_probe - y).abs();
            let ok =
                worst_curve <= ODE_MATCH_TOL && worst_z <= ODE_MATCH_TOL && du <= ODE_MATCH_TOL;
            Ok((
                ok,
                format!(
                    "curve distance {worst_curve:.2e}, gap identity {worst_z:.2e}, \
                     value at 0.9 T* off by {du:.2e} (tol {ODE_MATCH_TOL:.0e})"
                ),
            ))
        },
    ));

    results.push(criterion(
        3,
        "type-I rate exponent and stable empirical constant",
        || {
            let (traj2, est2) = ref_p2.as_ref().map_err(clone_err)?;
            let (traj1, est1) = ref_p1.as_ref().map_err(clone_err)?;
            let (traj2m, est2m) = mid_p2.as_ref().map_err(clone_err)?;
            let s2 = rate_exponent_fit(traj2, est2)?;
            let s1 = rate_exponent_fit(traj1, est1)?;
            let ok_s2 = (s2 - 1.0 / 3.0).abs() <= RATE_EXPONENT_TOL;
            let ok_s1 = (s1 - 1.0 / 2.0).abs() <= RATE_EXPONENT_TOL;
            let g_mid = empirical_type_i_gamma(traj2m, est2m)?;
            let g_fine = empirical_type_i_gamma(traj2, est2)?;
            let drift = (g_fine / g_mid - 1.0).abs();
            let ok_g = g_mid > 0.0 && drift <= GAMMA_STABILITY_TOL;
            Ok((
                ok_s2 && ok_s1 && ok_g,
                format!(
                    "slopes {s2:.4} (target 1/3), {s1:.4} (target 1/2); \
                     gamma {g_mid:.4} -> {g_fine:.4} (drift {:.1}%)",
                    100.0 * drift
                ),
            ))
        },
    ));

    results.push(criterion(
        4,
        "touchdown set of a radially nonincreasing profile shrinks onto the origin",
        || {
            // Odd cell counts put a node pair astride the origin, so the
            // detected set has positive width (one cell) and the halving
            // under refinement is non-vacuous.
            let ladder = [201usize, 403, 807];
            let mut ok = true;
            let mut details = Vec::new();
            for (kind, lambda) in [("constant", None), ("convex-0", Some(0.0))] {
                let mut widths = Vec::new();
                let runs = if lambda.is_some() { 2 } else { ladder.len() };
                for &cells in &ladder[..runs] {
                    let grid = build_grid(Domain::Interval { radius: 1.0 }, cells)?;
                    let f = match lambda {
                        None => Profile::constant(grid, 10.0)?,
                        Some(l) => make_convex(&grid, 10.0, l)?,
                    };
                    let traj = solve(&f, &fine_config(2.0), 2.0)?;
                    let est = estimate_touchdown_time(&traj)?;
                    let set = detect_touchdown_set(&traj, &est, KAPPA_TD_DEFAULT)?;
                    let h = traj.grid.h;
                    ok &= set.contains(0.0)
                        && set.width() > 0.0
                        && set.width() <= SET_WIDTH_CELLS * h;
                    widths.push(set.width());
                }
                for w in widths.windows(2) {
                    ok &= w[1] <= 0.5 * w[0] * (1.0 + 1e-9);
                }
                details.push(format!(
                    "{kind}: widths {:?}",
                    widths
                        .iter()
                        .map(|w| format!("{w:.2e}"))
                        .collect::<Vec<_>>()
                ));
            }
            Ok((ok, format!("{}; all contain 0", details.join("; "))))
        },
    ));

    results.push(criterion(
        5,
        "strictly convex profiles quench at their minimum point (the origin)",
        || {
            // Run on the half-line grid with a symmetry axis at the origin,
            // as the statement is radial.
            let grid = build_grid(
                Domain::RadialBall {
                    radius: 1.0,
                    dim: 1,
                },
                800,
            )?;
            let mut ok = true;
            let mut details = Vec::new();
            for &lambda in &[0.1, 0.5] {
                let f = make_convex(&grid, 10.0, lambda)?;
                let traj = solve(&f, &fine_config(2.0), 2.0)?;
                let est = estimate_touchdown_time(&traj)?;
                let set = detect_touchdown_set(&traj, &est, KAPPA_TD_DEFAULT)?;
                let span = set
                    .components
                    .iter()
                    .map(|&(lo, hi)| lo.abs().max(hi.abs()))
                    .fold(0.0f64, f64::max);
                let off_boundary = !set.contains(1.0);
                ok &= !set.is_empty() && span <= CONVEX_CONFINEMENT && off_boundary;
                details.push(format!("lambda={lambda}: set {:?}", set.components));
            }
            // Control at small curvature: there the confinement does hold,
            // which localizes any failure above to the parameter choice
            // rather than to the pipeline.
            let f = make_convex(&grid, 10.0, 0.01)?;
            let traj = solve(&f, &fine_config(2.0), 2.0)?;
            let est = estimate_touchdown_time(&traj)?;
            let set = detect_touchdown_set(&traj, &est, KAPPA_TD_DEFAULT)?;
            let control_span = set
                .components
                .iter()
                .map(|&(lo, hi)| lo.abs().max(hi.abs()))
                .fold(0.0f64, f64::max);
            Ok((
                ok,
                format!(
                    "{} (limit {CONVEX_CONFINEMENT}); control lambda=0.01 span {control_span:.3}",
                    details.join("; ")
                ),
            ))
        },
    ));

    results.push(criterion(
        6,
        "ring profile quenches on the ring; complement certified safe",
        || {
            let grid = build_grid(Domain::Interval { radius: 1.0 }, 400)?;
            let f = make_two_bump(&grid, 0.5, 0.2, 40.0, 0.05)?;
            let cfg = SolverConfig::new(2.0)?;
            let (traj, est, set) = run_and_detect(&f, &cfg)?;
            let on_ring = !set.is_empty()
                && set.components.iter().all(|&(lo, hi)| {
                    let (a, b) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
                    0.3 < a && b < 0.7
                });
            let gamma = empirical_type_i_gamma(&traj, &est)?;
            let center = no_touchdown_certificate(
                &traj,
                &est,
                &Region::CenteredBall { radius: 0.3 },
                gamma * 0.7,
            )?;
            let collar =
                no_touchdown_certificate(&traj, &est, &Region::Collar { inner: 0.8 }, gamma * 0.2)?;
            Ok((
                on_ring && center.holds && collar.holds,
                format!(
                    "set {:?} on ring: {on_ring}; margins center {:.3}, collar {:.3}",
                    set.components, center.margin, collar.margin
                ),
            ))
        },
    ));

    results.push(criterion(
        7,
        "twin-peak profile quenches off the origin in two symmetric pieces",
        || {
            let grid = build_grid(Domain::Interval { radius: 1.0 }, 400)?;
            let f = make_m_shaped(&grid, 0.01, 30.0, 0.28, 0.1)?;
            let cfg = SolverConfig::new(2.0)?;
            let (_, _, set) = run_and_detect(&f, &cfg)?;
            let within_band = set.components.iter().all(|&(lo, hi)| {
                let (a, b) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
                0.1 < a && b < 0.5
            });
            let left = set.components.iter().any(|&(_, hi)| hi < 0.0);
            let right = set.components.iter().any(|&(lo, _)| lo > 0.0);
            let origin_clear = !set.contains(0.0);
            Ok((
                !set.is_empty() && within_band && left && right && origin_clear,
                format!(
                    "components {:?}; off-origin {origin_clear}, both sides {}",
                    set.components,
                    left && right
                ),
            ))
        },
    ));

    results.push(criterion(
        8,
        "barrier monitor certifies proportional growth for some epsilon",
        || {
            let grid = build_grid(Domain::Interval { radius: 1.0 }, 200)?;
            let f = Profile::constant(grid, 10.0)?;
            let cfg = SolverConfig::new(2.0)?;
            let traj = solve(&f, &cfg, 1.0)?;
            if traj.terminated != Termination::QuenchStop {
                return Ok((false, "reference run did not quench".into()));
            }
            let barrier = harmonic_barrier(&traj.grid, 0.0, 0.9, 2.0)?;
            let t0 = 1.0 / (2.0 * 3.0 * 10.0);
            match search_barrier_epsilon(&traj, &barrier, t0)? {
                Some((eps, min_j)) => Ok((
                    min_j >= J_MIN_TOLERANCE,
                    format!("largest passing eps = {eps:.3e}, min J = {min_j:.3e}"),
                )),
                None => Ok((false, "no epsilon passed the monitor".into())),
            }
        },
    ));

    results.push(criterion(
        9,
        "touchdown data responds continuously to small profile perturbations",
        || {
            // The smallest perturbation moves the set by ~0.049 in the limit,
            // so the measurement must be converged enough for its own bias
            // (~1e-3, dominated by the time step) not to push it past 0.05.
            let grid = build_grid(Domain::Interval { radius: 1.0 }, 3200)?;
            let base = make_convex(&grid, 10.0, 0.5)?;
            let mut cfg = SolverConfig::new(2.0)?;
            cfg.dt_safety = 0.01;
            cfg.dt_init = 1e-4;
            let sweep = perturbation_sweep(&base, &[0.4, 0.2, 0.1, 0.05], 2.0, &cfg, 2.0)?;
            let last = sweep.rows.last().unwrap();
            let (v_t, v_s) = sweep.trend_violations();
            let ok = last.delta_t <= SWEEP_DT_FRAC * sweep.t_base
                && last.set_distance <= SWEEP_SET_TOL
                && v_t <= 1
                && v_s <= 1;
            Ok((
                ok,
                format!(
                    "smallest eps: dT {:.2e} (<= {:.2e}), set move {:.3} (<= {SWEEP_SET_TOL}), \
                     trend violations ({v_t}, {v_s})",
                    last.delta_t,
                    SWEEP_DT_FRAC * sweep.t_base,
                    last.set_distance
                ),
            ))
        },
    ));

    results.push(criterion(
        10,
        "critical plateau height located; touchdown set jumps across it",
        || {
            let grid = build_grid(Domain::Interval { radius: 1.0 }, 400)?;
            let geom = quenchlab::TwoAnnulusGeometry {
                r1: 0.3,
                r2: 0.65,
                half_width: 0.05,
                mu: 250.0,
                eta: 1.0,
            };
            let cfg = SolverConfig::new(2.0)?;
            let range = 2.0 * geom.mu - geom.eta;
            let tol_h = BISECTION_TOL_FRAC * range;
            let (s1_lo, s1_hi) = geom.support(1);
            let (s2_lo, s2_hi) = geom.support(2);
            let inside = |set: &TouchdownSet, lo: f64, hi: f64| {
                !set.is_empty()
                    && set.components.iter().all(|&(a, b)| {
                        let (p, q) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
                        lo <= p && q <= hi
                    })
            };

            // The discontinuity must persist when the bisection tolerance is
            // tightened fourfold: the set jump across the bracket stays
            // macroscopic while the bracket itself shrinks.
            let mut ok = true;
            let mut details = Vec::new();
            for tol in [tol_h, tol_h / 4.0] {
                let res = bisect_critical_height(&grid, &geom, &cfg, 1.0, tol)?;
                let flank_ok =
                    inside(&res.upper.set, s1_lo, s1_hi) && inside(&res.lower.set, s2_lo, s2_hi);
                let jump =
                    hausdorff_semidistance(&res.upper.set.components, &res.lower.set.components)?;
                let jump_ok = jump >= JUMP_FRACTION * (geom.r2 - geom.r1);
                ok &= res.bracket_width() <= tol && flank_ok && jump_ok;
                details.push(format!(
                    "tol {tol:.2e}: bracket [{:.3}, {:.3}] (width {:.2e}), jump {jump:.3}",
                    res.lower_h,
                    res.upper_h,
                    res.bracket_width()
                ));
            }
            Ok((
                ok,
                format!(
                    "{} (jump floor {:.3})",
                    details.join("; "),
                    JUMP_FRACTION * (geom.r2 - geom.r1)
                ),
            ))
        },
    ));

    results.push(criterion(
        11,
        "built-in verification suite passes wholesale",
        || {
            let start = Instant::now();
            let checks = run_all_checks(0);
            let secs = start.elapsed().as_secs_f64();
            let failed: Vec<&str> = checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            let ok = failed.is_empty() && secs < VERIFY_RUNTIME_BUDGET_S;
            Ok((
                ok,
                format!(
                    "{}/{} checks passed in {secs:.1}s{}",
                    checks.len() - failed.len(),
                    checks.len(),
                    if failed.is_empty() {
                        String::new()
                    } else {
                        format!("; failed: {failed:?}")
                    }
                ),
            ))
        },
    ));

    let mut all_ok = true;
    for r in &results {
        println!(
            "{} criterion {:02} — {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.idx,
            r.title,
            r.detail
        );
        all_ok &= r.passed;
    }
    assert!(
        all_ok,
        "failed criteria: {:?}",
        results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.idx)
            .collect::<Vec<_>>()
    );
}

fn clone_err(e: &quenchlab::Error) -> quenchlab::Error {
    quenchlab::Error::InvalidParameter(format!("shared reference run failed: {e}"))
}
