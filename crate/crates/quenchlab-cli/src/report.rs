//! Deterministic text output: structured reports with a fixed key order
//! and 17-significant-digit floats, plus the snapshot CSV.  Two writes of
//! the same result are byte-identical.

use std::fmt::Write as _;

use quenchlab::{
    BisectionResult, Certificate, Domain, MonitorReport, SweepResult, Termination,
    TouchdownEstimate, TouchdownSet, Trajectory,
};

/// Render with 17 significant digits (exact double-precision round trip),
/// in a form structured-text parsers accept.
pub fn float17(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// Render with `digits` significant digits in the usual scientific/plain
/// switching style (plain decimal for moderate exponents).
pub fn float_sig(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific form");
    let exp: i32 = exp.parse().expect("exponent parses");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let plain = format!("{x:.decimals$}");
        if plain.contains('.') {
            plain
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            plain
        }
    }
}

fn set_array(set: &TouchdownSet) -> String {
    components_array(&set.components)
}

fn components_array(components: &[(f64, f64)]) -> String {
    let inner: Vec<String> = components
        .iter()
        .map(|&(lo, hi)| format!("[{}, {}]", float17(lo), float17(hi)))
        .collect();
    format!("[{}]", inner.join(", "))
}

/// Everything the simulate subcommand reports.
pub struct SimulateReport<'a> {
    pub traj: &'a Trajectory,
    pub t_lower: f64,
    /// Closed-form upper bound when its hypothesis holds.
    pub t_upper: Option<f64>,
    pub upper_bound_r: f64,
    pub upper_bound_mu: f64,
    /// Quench-only diagnostics.
    pub quench: Option<QuenchBlock>,
    pub certificates: Vec<Certificate>,
    pub monitor: Option<MonitorBlock>,
}

pub struct QuenchBlock {
    pub est: TouchdownEstimate,
    pub rate_exponent: Option<f64>,
    pub gamma_emp: f64,
    pub kappa_td: f64,
    pub set: TouchdownSet,
}

pub struct MonitorBlock {
    pub center: f64,
    pub radius: f64,
    pub t0: f64,
    /// Largest barrier multiplier that passed, with its monitor report.
    pub passed: Option<(f64, MonitorReport)>,
}

pub fn render_simulate(r: &SimulateReport) -> String {
    let mut out = String::new();
    let traj = r.traj;
    out.push_str("command = \"simulate\"\n");
    let terminated = match traj.terminated {
        Termination::QuenchStop => "quench_stop",
        Termination::TMaxReached => "t_max_reached",
    };
    writeln!(out, "terminated = \"{terminated}\"").unwrap();
    let (kind, dim) = match traj.grid.domain {
        Domain::Interval { .. } => ("interval", 1),
        Domain::RadialBall { dim, .. } => ("radial", dim),
    };
    writeln!(out, "domain_kind = \"{kind}\"").unwrap();
    writeln!(
        out,
        "domain_radius = {}",
        float17(traj.grid.domain.radius())
    )
    .unwrap();
    writeln!(out, "domain_dim = {dim}").unwrap();
    writeln!(out, "cells = {}", traj.grid.cells).unwrap();
    writeln!(out, "p = {}", float17(traj.config.p)).unwrap();
    writeln!(out, "t_end = {}", float17(traj.t_end())).unwrap();
    writeln!(out, "steps = {}", traj.steps.len()).unwrap();
    writeln!(out, "max_u_end = {}", float17(traj.max_u_end())).unwrap();
    writeln!(out, "T_lower = {}", float17(r.t_lower)).unwrap();
    writeln!(out, "T_upper_applicable = {}", r.t_upper.is_some()).unwrap();
    writeln!(out, "T_upper = {}", float17(r.t_upper.unwrap_or(f64::NAN))).unwrap();
    writeln!(out, "upper_bound_r = {}", float17(r.upper_bound_r)).unwrap();
    writeln!(out, "upper_bound_mu = {}", float17(r.upper_bound_mu)).unwrap();
    if let Some(q) = &r.quench {
        writeln!(out, "T_est = {}", float17(q.est.t_est)).unwrap();
        writeln!(out, "fit_slope = {}", float17(q.est.slope)).unwrap();
        writeln!(out, "fit_residual = {}", float17(q.est.residual)).unwrap();
        if let Some(v) = q.rate_exponent {
            writeln!(out, "rate_exponent = {}", float17(v)).unwrap();
        }
        writeln!(out, "gamma_emp = {}", float17(q.gamma_emp)).unwrap();
        writeln!(out, "kappa_td = {}", float17(q.kappa_td)).unwrap();
        writeln!(out, "touchdown_set = {}", set_array(&q.set)).unwrap();
        writeln!(out, "touchdown_set_width = {}", float17(q.set.width())).unwrap();
    }
    if let Some(m) = &r.monitor {
        out.push_str("\n[j_monitor]\n");
        writeln!(out, "center = {}", float17(m.center)).unwrap();
        writeln!(out, "radius = {}", float17(m.radius)).unwrap();
        writeln!(out, "t0 = {}", float17(m.t0)).unwrap();
        writeln!(out, "passed = {}", m.passed.is_some()).unwrap();
        if let Some((eps, rep)) = &m.passed {
            writeln!(out, "epsilon = {}", float17(*eps)).unwrap();
            writeln!(out, "min_j = {}", float17(rep.min_j)).unwrap();
            writeln!(out, "at_t = {}", float17(rep.at_t)).unwrap();
            writeln!(out, "at_x = {}", float17(rep.at_x)).unwrap();
        }
    }
    for c in &r.certificates {
        out.push_str("\n[[certificates]]\n");
        writeln!(out, "region = \"{}\"", c.region.describe()).unwrap();
        writeln!(out, "k = {}", float17(c.k)).unwrap();
        writeln!(out, "holds = {}", c.holds).unwrap();
        writeln!(out, "margin = {}", float17(c.margin)).unwrap();
        writeln!(out, "source_slack = {}", float17(c.source_slack)).unwrap();
        writeln!(out, "boundary_slack = {}", float17(c.boundary_slack)).unwrap();
    }
    out
}

pub fn render_sweep(s: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str("command = \"sweep\"\n");
    writeln!(out, "q = {}", float17(s.q)).unwrap();
    writeln!(out, "t_base = {}", float17(s.t_base)).unwrap();
    writeln!(out, "base_set = {}", set_array(&s.base_set)).unwrap();
    let (vt, vs) = s.trend_violations();
    writeln!(out, "trend_violations_delta_t = {vt}").unwrap();
    writeln!(out, "trend_violations_set = {vs}").unwrap();
    for row in &s.rows {
        out.push_str("\n[[rows]]\n");
        writeln!(out, "eps = {}", float17(row.eps)).unwrap();
        writeln!(out, "dist_lq = {}", float17(row.dist_lq)).unwrap();
        writeln!(out, "delta_t = {}", float17(row.delta_t)).unwrap();
        writeln!(out, "set_distance = {}", float17(row.set_distance)).unwrap();
    }
    out
}

pub fn render_bisect(b: &BisectionResult) -> String {
    let mut out = String::new();
    out.push_str("command = \"bisect\"\n");
    writeln!(out, "lower_h = {}", float17(b.lower_h)).unwrap();
    writeln!(out, "upper_h = {}", float17(b.upper_h)).unwrap();
    writeln!(out, "bracket_width = {}", float17(b.bracket_width())).unwrap();
    writeln!(out, "midpoint = {}", float17(b.midpoint())).unwrap();
    writeln!(out, "lower_set = {}", set_array(&b.lower.set)).unwrap();
    writeln!(out, "upper_set = {}", set_array(&b.upper.set)).unwrap();
    writeln!(out, "probe_count = {}", b.probes.len()).unwrap();
    for p in &b.probes {
        out.push_str("\n[[probes]]\n");
        writeln!(out, "h = {}", float17(p.h)).unwrap();
        writeln!(out, "hits_inner = {}", p.hits_inner).unwrap();
        writeln!(out, "hits_outer = {}", p.hits_outer).unwrap();
        writeln!(out, "t_est = {}", float17(p.t_est)).unwrap();
        writeln!(
            out,
            "touchdown_set = {}",
            components_array(&p.set.components)
        )
        .unwrap();
    }
    out
}

/// Snapshot CSV: header `t,x,u`, one row per (snapshot, node), rows sorted
/// by (t, x), `\n` line endings.  Row count = snapshots x nodes.
pub fn render_snapshots(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(32 * traj.snapshots.len() * traj.grid.nodes.len());
    out.push_str("t,x,u\n");
    for snap in &traj.snapshots {
        let t = float17(snap.t);
        for (i, &x) in traj.grid.nodes.iter().enumerate() {
            out.push_str(&t);
            out.push(',');
            out.push_str(&float17(x));
            out.push(',');
            out.push_str(&float17(snap.u[i]));
            out.push('\n');
        }
    }
    out
}
