//! Built-in verification suite: invariant and consistency checks over the
//! whole pipeline, runnable from the command line.  Each check returns a
//! pass/fail verdict with a one-line quantitative detail.

use crate::analysis::{
    detect_touchdown_set, empirical_type_i_gamma, harmonic_barrier, no_touchdown_certificate,
    rate_exponent_fit, search_barrier_epsilon, upper_bound_touchdown_time, Region, TouchdownSet,
    KAPPA_TD_DEFAULT,
};
use crate::domain::{build_grid, Domain, Grid};
use crate::error::Result;
use crate::experiments::{bisect_critical_height, hausdorff_semidistance, perturbation_sweep};
use crate::profile::{
    lq_distance, make_convex, make_m_shaped, make_two_annulus, make_two_bump, quench_threshold,
    Profile, ProfileFamily, TwoAnnulusGeometry,
};
use crate::solver::{
    estimate_touchdown_time, ode_quench_solution, solve, SolverConfig, Termination,
    TouchdownEstimate, Trajectory,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn run(name: &str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = match body() {
        Ok((passed, detail)) => (passed, detail),
        Err(e) => (false, format!("error: {e}")),
    };
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn interval_grid(cells: usize) -> Result<Grid> {
    build_grid(Domain::Interval { radius: 1.0 }, cells)
}

struct Rung {
    t_est: f64,
    set: TouchdownSet,
    gamma: f64,
    slope: f64,
    grid_h: f64,
}

fn ladder_rung(cells: usize) -> Result<Rung> {
    let grid = interval_grid(cells)?;
    let f = Profile::constant(grid, 10.0)?;
    let mut cfg = SolverConfig::new(2.0)?;
    cfg.dt_safety = 0.02;
    cfg.dt_init = 2e-4;
    let traj = solve(&f, &cfg, 1.0)?;
    let est = estimate_touchdown_time(&traj)?;
    let set = detect_touchdown_set(&traj, &est, KAPPA_TD_DEFAULT)?;
    let gamma = empirical_type_i_gamma(&traj, &est)?;
    let slope = rate_exponent_fit(&traj, &est)?;
    Ok(Rung {
        t_est: est.t_est,
        set,
        gamma,
        slope,
        grid_h: traj.grid.h,
    })
}

fn quench_run(cells: usize, value: f64) -> Result<(Trajectory, TouchdownEstimate)> {
    let f = Profile::constant(interval_grid(cells)?, value)?;
    let cfg = SolverConfig::new(2.0)?;
    let traj = solve(&f, &cfg, 1.0)?;
    let est = estimate_touchdown_time(&traj)?;
    Ok((traj, est))
}

/// Run the whole verification suite.  `seed` drives the randomized
/// algebraic checks; everything else is deterministic.
pub fn run_all_checks(seed: u64) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    out.push(run("laplacian_exact_on_quadratics", || {
        let mut worst = 0.0f64;
        for &(dim, cells) in &[(1u32, 64usize), (2, 64), (3, 64)] {
            let grid = if dim == 1 {
                interval_grid(cells)?
            } else {
                build_grid(Domain::RadialBall { radius: 1.0, dim }, cells)?
            };
            let u: Vec<f64> = grid.nodes.iter().map(|&x| 1.0 - x * x).collect();
            let lap = grid.laplacian_apply(&u)?;
            for (i, &l) in lap.iter().enumerate() {
                if !grid.is_boundary(i) {
                    worst = worst.max((l + 2.0 * dim as f64).abs());
                }
            }
        }
        Ok((worst <= 1e-9, format!("max defect {worst:.3e}")))
    }));

    let lin_seed = rng.gen::<u64>();
    out.push(run("laplacian_linearity_random", || {
        let mut rng = ChaCha8Rng::seed_from_u64(lin_seed);
        let grid = interval_grid(100)?;
        let n = grid.num_nodes();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let alpha: f64 = rng.gen_range(-3.0..3.0);
        let combo: Vec<f64> = u.iter().zip(&v).map(|(&a, &b)| alpha * a + b).collect();
        let lhs = grid.laplacian_apply(&combo)?;
        let lu = grid.laplacian_apply(&u)?;
        let lv = grid.laplacian_apply(&v)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max((lhs[i] - alpha * lu[i] - lv[i]).abs());
        }
        let scale = 1.0 / (grid.h * grid.h);
        Ok((worst <= 1e-9 * scale, format!("max defect {worst:.3e}")))
    }));

    out.push(run("quench_threshold_matches_scan", || {
        let mut worst = 0.0f64;
        for &p in &[1.0, 2.0, 3.5] {
            for &n in &[1u32, 2, 3] {
                let lam = crate::profile::principal_eigenvalue(n)?;
                let closed = quench_threshold(p, n)?;
                let mut best = 0.0f64;
                for k in 0..200_000 {
                    let s = k as f64 / 200_000.0;
                    best = best.max(s * (1.0 - s).powf(p));
                }
                worst = worst.max((closed - lam * best).abs() / closed);
            }
        }
        Ok((worst <= 1e-5, format!("max relative defect {worst:.3e}")))
    }));

    out.push(run("profile_constructors_shapes", || {
        let grid = interval_grid(40)?;
        let tb = make_two_bump(&grid, 0.5, 0.2, 40.0, 0.05)?;
        let at = |x: f64| ((x + 1.0) / grid.h).round() as usize;
        let plateau_ok = tb.values[at(0.45)] == 40.0 && tb.values[at(-0.45)] == 40.0;
        let background_ok = tb.values[at(0.0)] == 0.05 && tb.values[at(0.9)] == 0.05;
        // The peak sits between nodes on this grid, so allow one cell of
        // sampling error on the maximum.
        let ms = make_m_shaped(&grid, 0.01, 30.0, 0.28, 0.1)?;
        let m_ok = (ms.max_value() - 30.0).abs() <= 30.0 * 0.15
            && ms.max_value() <= 30.0
            && ms.values[at(0.0)] == 0.01;
        let geom = TwoAnnulusGeometry {
            r1: 0.3,
            r2: 0.65,
            half_width: 0.05,
            mu: 250.0,
            eta: 1.0,
        };
        let fh = make_two_annulus(&grid, 100.0, &geom)?;
        let fpartner = make_two_annulus(&grid, geom.partner_height(100.0), &geom)?;
        let mut swap_defect = 0.0f64;
        for (i, &x) in grid.nodes.iter().enumerate() {
            let d1 = (x.abs() - 0.3f64).abs();
            let d2 = (x.abs() - 0.65f64).abs();
            if d1 <= 0.05 || d2 <= 0.05 {
                let sum = fh.values[i] + fpartner.values[i];
                swap_defect = swap_defect.max((sum - (2.0 * 250.0 + 1.0)).abs());
            }
        }
        let ok = plateau_ok && background_ok && m_ok && swap_defect <= 1e-10;
        Ok((
            ok,
            format!(
                "plateau {plateau_ok}, background {background_ok}, m-shape {m_ok}, \
                 swap defect {swap_defect:.2e}"
            ),
        ))
    }));

    let lq_seed = rng.gen::<u64>();
    out.push(run("lq_distance_is_a_norm", || {
        let mut rng = ChaCha8Rng::seed_from_u64(lq_seed);
        let grid = interval_grid(60)?;
        let n = grid.num_nodes();
        let mk = |vals: Vec<f64>| {
            Profile::new(grid.clone(), vals, ProfileFamily::Custom, BTreeMap::new())
        };
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let (fa, fb, fc) = (mk(a)?, mk(b)?, mk(c)?);
        let mut worst = f64::NEG_INFINITY;
        for &q in &[1.0, 2.0, f64::INFINITY] {
            let tri =
                lq_distance(&fa, &fc, q)? - (lq_distance(&fa, &fb, q)? + lq_distance(&fb, &fc, q)?);
            worst = worst.max(tri);
        }
        Ok((worst <= 1e-12, format!("max triangle defect {worst:.3e}")))
    }));

    out.push(run("solution_below_ode_envelope", || {
        let (traj, _) = quench_run(800, 10.0)?;
        let t_star = 1.0 / 30.0;
        let mut worst = f64::NEG_INFINITY;
        for snap in &traj.snapshots {
            if snap.t >= 0.98 * t_star {
                continue;
            }
            let y = ode_quench_solution(2.0, 10.0, snap.t)?;
            let max_u = snap.u.iter().cloned().fold(0.0, f64::max);
            worst = worst.max(max_u - y);
        }
        Ok((worst <= 5e-3, format!("max (u - envelope) = {worst:.3e}")))
    }));

    out.push(run("evolution_monotone_and_admissible", || {
        let (traj, _) = quench_run(400, 10.0)?;
        let mut min_increment = f64::INFINITY;
        let mut range_ok = true;
        let mut boundary_ok = true;
        for w in traj.snapshots.windows(2) {
            for i in 0..w[0].u.len() {
                min_increment = min_increment.min(w[1].u[i] - w[0].u[i]);
            }
        }
        for snap in &traj.snapshots {
            for (i, &v) in snap.u.iter().enumerate() {
                range_ok &= (0.0..1.0).contains(&v);
                if traj.grid.is_boundary(i) {
                    boundary_ok &= v == 0.0;
                }
            }
        }
        let ok = min_increment >= -1e-10 && range_ok && boundary_ok;
        Ok((
            ok,
            format!(
                "min increment {min_increment:.2e}, range ok {range_ok}, \
                 boundary ok {boundary_ok}"
            ),
        ))
    }));

    out.push(run("reruns_bit_identical", || {
        let (a, _) = quench_run(200, 10.0)?;
        let (b, _) = quench_run(200, 10.0)?;
        let same_len = a.snapshots.len() == b.snapshots.len();
        let mut identical = same_len;
        if same_len {
            for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
                identical &= sa.t.to_bits() == sb.t.to_bits();
                identical &=
                    sa.u.iter()
                        .zip(&sb.u)
                        .all(|(x, y)| x.to_bits() == y.to_bits());
            }
        }
        Ok((identical, format!("snapshots equal bitwise: {identical}")))
    }));

    out.push(run("stronger_source_quenches_first", || {
        let (_, e10) = quench_run(200, 10.0)?;
        let (_, e5) = quench_run(200, 5.0)?;
        let ok = e10.t_est < e5.t_est;
        Ok((
            ok,
            format!(
                "T_est(f=10) = {:.5}, T_est(f=5) = {:.5}",
                e10.t_est, e5.t_est
            ),
        ))
    }));

    // The expensive part: one family of runs on a dyadic grid ladder,
    // shared by the convergence, sandwich, refinement and rate checks.
    let ladder: Result<Vec<Rung>> = (|| {
        let mut rungs = Vec::new();
        for &cells in &[200usize, 400, 800, 1600] {
            rungs.push(ladder_rung(cells)?);
        }
        Ok(rungs)
    })();

    out.push(run("touchdown_time_sandwiched_by_bounds", || {
        let rungs = ladder.as_ref().map_err(clone_err)?;
        let t_lower = 1.0 / 30.0;
        let t_upper = upper_bound_touchdown_time(2.0, 1, 10.0, 0.9)?;
        let t_est = rungs[1].t_est;
        let ok = t_lower <= t_est && t_est <= 1.02 * t_upper;
        Ok((
            ok,
            format!("{t_lower:.6} <= {t_est:.6} <= 1.02 * {t_upper:.6}"),
        ))
    }));

    out.push(run("touchdown_time_grid_convergent", || {
        let rungs = ladder.as_ref().map_err(clone_err)?;
        let d: Vec<f64> = rungs
            .windows(2)
            .map(|w| (w[1].t_est - w[0].t_est).abs())
            .collect();
        let ratio_ok = |coarse: f64, fine: f64| fine <= 1e-12 || coarse / fine >= 2.0;
        let ok = ratio_ok(d[0], d[1]) && ratio_ok(d[1], d[2]);
        Ok((
            ok,
            format!(
                "successive differences {:.3e}, {:.3e}, {:.3e}",
                d[0], d[1], d[2]
            ),
        ))
    }));

    out.push(run("touchdown_set_stable_under_refinement", || {
        let rungs = ladder.as_ref().map_err(clone_err)?;
        let mut worst = 0.0f64;
        let mut all_contain_origin = true;
        for w in rungs.windows(2) {
            let a = &w[0].set.components;
            let b = &w[1].set.components;
            worst = worst
                .max(hausdorff_semidistance(a, b)?)
                .max(hausdorff_semidistance(b, a)?);
            all_contain_origin &= w[0].set.contains(0.0) && w[1].set.contains(0.0);
        }
        let tol = 2.0 * rungs[0].grid_h;
        let ok = worst <= tol && all_contain_origin;
        Ok((
            ok,
            format!("max set movement {worst:.4e} (tol {tol:.4e}), origin flagged: {all_contain_origin}"),
        ))
    }));

    out.push(run("type_i_rate_diagnostics", || {
        let rungs = ladder.as_ref().map_err(clone_err)?;
        let slope = rungs[1].slope;
        let slope_ok = (slope - 1.0 / 3.0).abs() <= 0.05;
        let g1 = rungs[1].gamma;
        let g2 = rungs[2].gamma;
        let gamma_ok = g1 > 0.0 && g2 > 0.0 && (g2 / g1 - 1.0).abs() <= 0.1;
        Ok((
            slope_ok && gamma_ok,
            format!("rate slope {slope:.4} (target 1/3), gamma {g1:.4} -> {g2:.4}"),
        ))
    }));

    out.push(run("touchdown_is_localized", || {
        let rungs = ladder.as_ref().map_err(clone_err)?;
        let (traj, _) = quench_run(400, 10.0)?;
        let last = traj.final_state();
        let gap_at = |x: f64| {
            let i = ((x + 1.0) / traj.grid.h).round() as usize;
            1.0 - last.u[i]
        };
        let central = gap_at(0.0);
        let off = gap_at(0.5).min(gap_at(-0.5));
        let ok = central <= 2e-4 && off >= 0.05 && rungs[1].set.width() <= 4.0 * traj.grid.h;
        Ok((
            ok,
            format!("gap at center {central:.2e}, off-center {off:.3}"),
        ))
    }));

    out.push(run("barrier_monitor_certifies_growth", || {
        let (traj, _) = quench_run(200, 10.0)?;
        let barrier = harmonic_barrier(&traj.grid, 0.0, 0.9, 2.0)?;
        let t0 = 1.0 / (2.0 * 3.0 * 10.0);
        let found = search_barrier_epsilon(&traj, &barrier, t0)?;
        match found {
            Some((eps, min_j)) => Ok((
                min_j >= crate::analysis::J_MIN_TOLERANCE,
                format!("largest passing eps = {eps:.3e}, min J = {min_j:.3e}"),
            )),
            None => Ok((false, "no epsilon passed the monitor".into())),
        }
    }));

    out.push(run("certificates_exclude_detected_set", || {
        let grid = interval_grid(400)?;
        let f = make_two_bump(&grid, 0.5, 0.2, 40.0, 0.05)?;
        let cfg = SolverConfig::new(2.0)?;
        let traj = solve(&f, &cfg, 1.0)?;
        if traj.terminated != Termination::QuenchStop {
            return Ok((false, "ring profile failed to quench".into()));
        }
        let est = estimate_touchdown_time(&traj)?;
        let set = detect_touchdown_set(&traj, &est, KAPPA_TD_DEFAULT)?;
        let gamma = empirical_type_i_gamma(&traj, &est)?;
        let center = Region::CenteredBall { radius: 0.3 };
        let collar = Region::Collar { inner: 0.8 };
        let c1 = no_touchdown_certificate(&traj, &est, &center, gamma * 0.7)?;
        let c2 = no_touchdown_certificate(&traj, &est, &collar, gamma * 0.2)?;
        let disjoint =
            !set.intersects(-0.3, 0.3) && !set.intersects(0.8, 1.0) && !set.intersects(-1.0, -0.8);
        // Sharpness: at the critical constant the certificate must fail.
        let sup_center = f.values[((0.0f64 + 1.0) / grid.h).round() as usize];
        let k_eq = (3.0 * sup_center).powf(1.0 / 3.0);
        let c_eq = no_touchdown_certificate(&traj, &est, &center, k_eq)?;
        let ok = c1.holds && c2.holds && disjoint && !set.is_empty() && !c_eq.holds;
        Ok((
            ok,
            format!(
                "center margin {:.3}, collar margin {:.3}, disjoint {disjoint}, \
                 equality case holds {} (want false)",
                c1.margin, c2.margin, c_eq.holds
            ),
        ))
    }));

    out.push(run("perturbation_response_shrinks", || {
        let grid = interval_grid(200)?;
        let base = make_convex(&grid, 10.0, 0.5)?;
        let cfg = SolverConfig::new(2.0)?;
        let sweep = perturbation_sweep(&base, &[0.2, 0.1, 0.05], 2.0, &cfg, 1.0)?;
        let last = sweep.rows.last().unwrap();
        let ok = sweep.trend_ok() && last.delta_t <= 0.1 * sweep.t_base;
        let (v1, v2) = sweep.trend_violations();
        Ok((
            ok,
            format!(
                "trend violations ({v1}, {v2}), smallest delta_t {:.2e} vs t_base {:.4}",
                last.delta_t, sweep.t_base
            ),
        ))
    }));

    out.push(run("critical_height_bisection_localizes", || {
        let grid = interval_grid(200)?;
        let geom = TwoAnnulusGeometry {
            r1: 0.3,
            r2: 0.65,
            half_width: 0.05,
            mu: 25.0,
            eta: 1.0,
        };
        let cfg = SolverConfig::new(2.0)?;
        let res = bisect_critical_height(&grid, &geom, &cfg, 1.0, 2.0)?;
        let symmetric = geom.mu + 0.5 * geom.eta;
        let contains = res.lower_h < symmetric + 5.0 && res.upper_h > symmetric - 5.0;
        let jump = hausdorff_semidistance(&res.upper.set.components, &res.lower.set.components)?;
        let ok = res.bracket_width() <= 2.0 && contains && jump >= 0.5 * (geom.r2 - geom.r1);
        Ok((
            ok,
            format!(
                "bracket [{:.2}, {:.2}], set jump {jump:.3}",
                res.lower_h, res.upper_h
            ),
        ))
    }));

    out
}

fn clone_err(e: &crate::error::Error) -> crate::error::Error {
    crate::error::Error::InvalidParameter(format!("ladder run failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    // The suite itself is exercised end to end by the integration tests;
    // here only the harness plumbing.
    #[test]
    fn runner_captures_errors_as_failures() {
        let r = run("boom", || {
            Err(crate::error::Error::InvalidParameter("x".into()))
        });
        assert!(!r.passed);
        assert!(r.detail.contains("error"));
        let r = run("fine", || Ok((true, "ok".into())));
        assert!(r.passed);
    }
}
