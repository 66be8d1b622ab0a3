//! Post-run analysis: touchdown-time bounds, touchdown-set detection,
//! rate diagnostics, harmonic barriers and no-touchdown certificates.

use crate::domain::{Domain, Grid};
use crate::error::{Error, Result};
use crate::profile::{quench_threshold, Profile};
use crate::solver::{Termination, TouchdownEstimate, Trajectory};

/// Lower bound for the touchdown time: `1 / ((p+1) max f)`.
/// A vanishing profile cannot quench at all; that returns infinity.
pub fn lower_bound_touchdown_time(p: f64, f: &Profile) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let max_f = f.max_value();
    if max_f == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / ((p + 1.0) * max_f))
}

/// Upper bound for the touchdown time of any profile that stays at or
/// above `mu` on a ball of radius `r`: `1 / ((p+1)(mu - threshold/r^2))`.
/// Inapplicable when `mu` does not clear the threshold.
pub fn upper_bound_touchdown_time(p: f64, n: u32, mu: f64, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ball radius r = {r} must be positive"
        )));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "floor level mu = {mu} must be positive"
        )));
    }
    let threshold = quench_threshold(p, n)? / (r * r);
    if mu <= threshold {
        return Err(Error::BoundInapplicable { mu, threshold });
    }
    Ok(1.0 / ((p + 1.0) * (mu - threshold)))
}

/// A subregion of the domain, described in the radial coordinate
/// `s = |x|` for `CenteredBall`/`Collar` and in the grid coordinate for
/// `Interval`.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// `{ |x| <= radius }`.
    CenteredBall { radius: f64 },
    /// `{ |x| >= inner }`: a collar along the outer boundary.
    Collar { inner: f64 },
    /// `[lo, hi]` in the grid coordinate (signed on interval grids).
    Interval { lo: f64, hi: f64 },
}

impl Region {
    pub fn describe(&self) -> String {
        match *self {
            Region::CenteredBall { radius } => format!("ball |x| <= {radius}"),
            Region::Collar { inner } => format!("collar |x| >= {inner}"),
            Region::Interval { lo, hi } => format!("interval [{lo}, {hi}]"),
        }
    }

    fn validate(&self, grid: &Grid) -> Result<()> {
        let r_dom = grid.domain.radius();
        let ok = match *self {
            Region::CenteredBall { radius } => 0.0 < radius && radius < r_dom,
            Region::Collar { inner } => 0.0 < inner && inner < r_dom,
            Region::Interval { lo, hi } => {
                let min = match grid.domain {
                    Domain::Interval { .. } => -r_dom,
                    Domain::RadialBall { .. } => 0.0,
                };
                min <= lo && lo < hi && hi <= r_dom
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "region {} does not fit the domain (radius {r_dom})",
                self.describe()
            )))
        }
    }

    /// Indices of grid nodes inside the region.
    pub fn node_indices(&self, grid: &Grid) -> Result<Vec<usize>> {
        self.validate(grid)?;
        let keep = |x: f64| match *self {
            Region::CenteredBall { radius } => x.abs() <= radius,
            Region::Collar { inner } => x.abs() >= inner,
            Region::Interval { lo, hi } => lo <= x && x <= hi,
        };
        Ok(grid
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, &x)| keep(x))
            .map(|(i, _)| i)
            .collect())
    }

    /// Indices of the nodes nearest to the region's internal boundary
    /// (the interface separating it from the rest of the domain).
    pub fn boundary_indices(&self, grid: &Grid) -> Result<Vec<usize>> {
        self.validate(grid)?;
        let radial = matches!(grid.domain, Domain::RadialBall { .. });
        let coords: Vec<f64> = match *self {
            Region::CenteredBall { radius } => {
                if radial {
                    vec![radius]
                } else {
                    vec![-radius, radius]
                }
            }
            Region::Collar { inner } => {
                if radial {
                    vec![inner]
                } else {
                    vec![-inner, inner]
                }
            }
            Region::Interval { lo, hi } => vec![lo, hi],
        };
        let mut idx: Vec<usize> = coords.into_iter().map(|x| nearest_node(grid, x)).collect();
        idx.dedup();
        Ok(idx)
    }
}

fn nearest_node(grid: &Grid, x: f64) -> usize {
    let pos = (x - grid.nodes[0]) / grid.h;
    (pos.round() as i64).clamp(0, grid.cells as i64) as usize
}

/// Detected touchdown set: maximal closed intervals of flagged nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchdownSet {
    /// Closed intervals in the grid coordinate, sorted and disjoint.
    pub components: Vec<(f64, f64)>,
    /// Flagging threshold on the `(1 - u)^{p+1}` ratio scale.
    pub kappa: f64,
    /// Cell width of the grid the set was detected on.
    pub cell_width: f64,
}

impl TouchdownSet {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.components.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// True if any component meets `[lo, hi]`.
    pub fn intersects(&self, lo: f64, hi: f64) -> bool {
        self.components.iter().any(|&(a, b)| a <= hi && lo <= b)
    }

    /// Total width of all components.
    pub fn width(&self) -> f64 {
        self.components.iter().map(|&(lo, hi)| hi - lo).sum()
    }
}

/// Default flagging threshold: a node belongs to the touchdown set when
/// its final gap satisfies `(1 - u)^{p+1} <= kappa * (1 - max u)^{p+1}`.
pub const KAPPA_TD_DEFAULT: f64 = 8.0;

/// Flag near-touchdown nodes in the final state radius and merge them into
/// intervals.  A second pass drops any component all of whose nodes admit a
/// no-touchdown certificate built from the empirical type-I constant.
pub fn detect_touchdown_set(
    traj: &Trajectory,
    est: &TouchdownEstimate,
    kappa: f64,
) -> Result<TouchdownSet> {
    if traj.terminated != Termination::QuenchStop {
        return Err(Error::InvalidParameter(
            "touchdown-set detection requires a run that reached the stopping gap".into(),
        ));
    }
    if !(kappa.is_finite() && kappa >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "detection threshold kappa = {kappa} must be >= 1"
        )));
    }
    let grid = &traj.grid;
    let p = traj.config.p;
    let last = traj.final_state();
    let gap_min: f64 = last
        .u
        .iter()
        .map(|&v| 1.0 - v)
        .fold(f64::INFINITY, f64::min);
    let z_cut = kappa * gap_min.powf(p + 1.0);

    let flagged: Vec<bool> = last
        .u
        .iter()
        .enumerate()
        .map(|(i, &v)| !grid.is_boundary(i) && (1.0 - v).powf(p + 1.0) <= z_cut)
        .collect();

    // Merge runs of flagged nodes.
    let mut components = Vec::new();
    let mut run_start: Option<usize> = None;
    for i in 0..=flagged.len() {
        let on = i < flagged.len() && flagged[i];
        match (on, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                components.push((s, i - 1));
                run_start = None;
            }
            _ => {}
        }
    }

    // Second pass: a component is discarded when every one of its nodes is
    // covered by a no-touchdown certificate with the empirical constant.
    let gamma = empirical_type_i_gamma(traj, est)?;
    let mut kept = Vec::new();
    'comp: for &(s, e) in &components {
        for i in s..=e {
            let x = grid.nodes[i];
            let lo = (x - grid.h).max(grid.nodes[0]);
            let hi = (x + grid.h).min(grid.nodes[grid.cells]);
            let region = Region::Interval { lo, hi };
            let delta_min = region
                .boundary_indices(grid)?
                .iter()
                .map(|&j| grid.boundary_distance(grid.nodes[j]).unwrap_or(0.0))
                .fold(f64::INFINITY, f64::min);
            let k = gamma * delta_min;
            let certified = k > 0.0
                && no_touchdown_certificate(traj, est, &region, k)
                    .map(|c| c.holds)
                    .unwrap_or(false);
            if !certified {
                kept.push((grid.nodes[s], grid.nodes[e]));
                continue 'comp;
            }
        }
    }

    Ok(TouchdownSet {
        components: kept,
        kappa,
        cell_width: grid.h,
    })
}

/// Empirical type-I constant: the infimum over recorded snapshots
/// (before the estimated touchdown time) and interior nodes of
/// `(1 - u) / (delta(x) (T_est - t)^{1/(p+1)})`.
pub fn empirical_type_i_gamma(traj: &Trajectory, est: &TouchdownEstimate) -> Result<f64> {
    let delta: Vec<f64> = traj
        .grid
        .nodes
        .iter()
        .map(|&x| traj.grid.boundary_distance(x).unwrap_or(0.0))
        .collect();
    empirical_type_i_gamma_with_delta(traj, est, &delta)
}

/// Same as [`empirical_type_i_gamma`] with explicit distance weights;
/// exposed so synthetic data can be checked against closed forms.
pub fn empirical_type_i_gamma_with_delta(
    traj: &Trajectory,
    est: &TouchdownEstimate,
    delta: &[f64],
) -> Result<f64> {
    if delta.len() != traj.grid.num_nodes() {
        return Err(Error::ShapeMismatch {
            expected: traj.grid.num_nodes(),
            got: delta.len(),
        });
    }
    let p = traj.config.p;
    let inv = 1.0 / (p + 1.0);
    let mut gamma = f64::INFINITY;
    for snap in &traj.snapshots {
        if snap.t >= est.t_est {
            continue;
        }
        let scale = (est.t_est - snap.t).powf(inv);
        for (i, &u) in snap.u.iter().enumerate() {
            if delta[i] > 0.0 {
                gamma = gamma.min((1.0 - u) / (delta[i] * scale));
            }
        }
    }
    if gamma.is_finite() {
        Ok(gamma)
    } else {
        Err(Error::Fit(
            "no snapshots before the estimated touchdown time".into(),
        ))
    }
}

/// Slope of `log(1 - max u)` against `log(T_est - t)` over the tail of the
/// run.  Type-I touchdown shows as a slope near `1/(p+1)`.
pub fn rate_exponent_fit(traj: &Trajectory, est: &TouchdownEstimate) -> Result<f64> {
    let window = traj.config.fit_window.min(traj.steps.len());
    let tail = &traj.steps[traj.steps.len() - window..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter(|s| est.t_est > s.t && s.max_u < 1.0)
        .map(|s| ((est.t_est - s.t).ln(), (1.0 - s.max_u).ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::Fit(format!(
            "rate fit needs at least 5 usable points, have {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let x_mean = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for &(x, y) in &pts {
        cov += (x - x_mean) * (y - y_mean);
        var += (x - x_mean) * (x - x_mean);
    }
    if var == 0.0 {
        return Err(Error::Fit("rate fit window has no time spread".into()));
    }
    Ok(cov / var)
}

/// Harmonic barrier for a ball `B`: `phi` solves the Laplace equation
/// outside `B`, equals 1 on the closed ball and 0 on the outer boundary;
/// the weight is `a = phi^{p+1}`, extended by 1 inside `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub grid: Grid,
    pub center: f64,
    pub radius: f64,
    pub p: f64,
    pub phi: Vec<f64>,
    /// `phi^{p+1}` nodewise.
    pub weight: Vec<f64>,
}

/// Build the barrier from the closed-form harmonic functions: piecewise
/// linear on intervals, `log r` in dimension 2 and `r^{2-n}` in dimension 3.
pub fn harmonic_barrier(grid: &Grid, center: f64, radius: f64, p: f64) -> Result<Barrier> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    let r_dom = grid.domain.radius();
    if !(radius > 0.0 && center.abs() + radius < r_dom) {
        return Err(Error::Geometry(format!(
            "ball B({center}, {radius}) must lie strictly inside the domain (radius {r_dom})"
        )));
    }
    let radial = matches!(grid.domain, Domain::RadialBall { .. });
    if radial && center != 0.0 {
        return Err(Error::UnsupportedGeometry(
            "harmonic barrier on a radial grid requires a centered ball".into(),
        ));
    }
    let dim = grid.domain.dim();
    let phi: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&x| match grid.domain {
            Domain::Interval { .. } => {
                if x < center - radius {
                    (x + r_dom) / (center - radius + r_dom)
                } else if x > center + radius {
                    (r_dom - x) / (r_dom - center - radius)
                } else {
                    1.0
                }
            }
            Domain::RadialBall { .. } => {
                if x <= radius {
                    1.0
                } else {
                    match dim {
                        1 => (r_dom - x) / (r_dom - radius),
                        2 => (x.ln() - r_dom.ln()) / (radius.ln() - r_dom.ln()),
                        _ => {
                            let g = |r: f64| r.powf(2.0 - dim as f64);
                            (g(x) - g(r_dom)) / (g(radius) - g(r_dom))
                        }
                    }
                }
            }
        })
        .collect();
    let weight = phi.iter().map(|&v| v.powf(p + 1.0)).collect();
    Ok(Barrier {
        grid: grid.clone(),
        center,
        radius,
        p,
        phi,
        weight,
    })
}

/// Result of a barrier monitor evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub min_j: f64,
    /// Snapshot time at which the minimum occurred.
    pub at_t: f64,
    /// Node coordinate at which the minimum occurred.
    pub at_x: f64,
}

/// Evaluate `J = u_t - eps * a(x) * ((1-u)^{-p} + 1)` over all snapshots
/// with `t >= t0` and all interior nodes, with `u_t` taken from the
/// equation's right-hand side.  A nonnegative minimum witnesses that the
/// solution keeps rising at least proportionally to the barrier.
pub fn monitor_j(traj: &Trajectory, barrier: &Barrier, eps: f64, t0: f64) -> Result<MonitorReport> {
    if barrier.grid != traj.grid {
        return Err(Error::GridMismatch);
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "barrier multiplier eps = {eps} must be nonnegative"
        )));
    }
    let p = traj.config.p;
    let grid = &traj.grid;
    let mut report: Option<MonitorReport> = None;
    for snap in &traj.snapshots {
        if snap.t < t0 {
            continue;
        }
        let lap = grid.laplacian_apply(&snap.u)?;
        for (i, &lap_i) in lap.iter().enumerate() {
            if grid.is_boundary(i) {
                continue;
            }
            let g = (1.0 - snap.u[i]).powf(-p);
            let u_t = lap_i + traj.profile.values[i] * g;
            let j = u_t - eps * barrier.weight[i] * (g + 1.0);
            if report.as_ref().is_none_or(|r| j < r.min_j) {
                report = Some(MonitorReport {
                    min_j: j,
                    at_t: snap.t,
                    at_x: grid.nodes[i],
                });
            }
        }
    }
    report.ok_or_else(|| Error::InvalidParameter(format!("no snapshots at or after t0 = {t0}")))
}

/// Monitor minima down to this value count as a pass (absorbs roundoff).
pub const J_MIN_TOLERANCE: f64 = -1e-6;

/// Largest `eps` of the ladder `1, 1/2, 1/4, ...` (at most 40 halvings)
/// whose monitor minimum clears [`J_MIN_TOLERANCE`], with that minimum.
pub fn search_barrier_epsilon(
    traj: &Trajectory,
    barrier: &Barrier,
    t0: f64,
) -> Result<Option<(f64, f64)>> {
    let mut eps = 1.0;
    for _ in 0..=40 {
        let report = monitor_j(traj, barrier, eps, t0)?;
        if report.min_j >= J_MIN_TOLERANCE {
            return Ok(Some((eps, report.min_j)));
        }
        eps *= 0.5;
    }
    Ok(None)
}

/// Slack of the source-smallness condition `sup_D f < k^{p+1} / (p+1)`.
pub fn source_smallness_slack(sup_f: f64, k: f64, p: f64) -> f64 {
    k.powf(p + 1.0) / (p + 1.0) - sup_f
}

/// A no-touchdown certificate for a region.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub region: Region,
    pub k: f64,
    pub holds: bool,
    /// `min(source_slack, boundary_slack) - 3 * fit residual`.
    pub margin: f64,
    pub source_slack: f64,
    pub boundary_slack: f64,
}

/// Certify that no touchdown occurs in `region`: the profile must satisfy
/// `sup f < k^{p+1}/(p+1)` there (strictly), and on the region's interface
/// the solution must stay below `1 - k (T_est - t)^{1/(p+1)}` at every
/// snapshot.  The fit residual of the touchdown-time estimate is charged
/// three times against the margin, so marginal certificates fail.
pub fn no_touchdown_certificate(
    traj: &Trajectory,
    est: &TouchdownEstimate,
    region: &Region,
    k: f64,
) -> Result<Certificate> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "certificate constant k = {k} must be positive"
        )));
    }
    let p = traj.config.p;
    let grid = &traj.grid;
    let inside = region.node_indices(grid)?;
    if inside.is_empty() {
        return Err(Error::Geometry(format!(
            "region {} contains no grid nodes",
            region.describe()
        )));
    }
    let sup_f = inside
        .iter()
        .map(|&i| traj.profile.values[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let source_slack = source_smallness_slack(sup_f, k, p);

    let interface = region.boundary_indices(grid)?;
    let inv = 1.0 / (p + 1.0);
    let mut boundary_slack = f64::INFINITY;
    for snap in &traj.snapshots {
        if snap.t >= est.t_est {
            continue;
        }
        let envelope = 1.0 - k * (est.t_est - snap.t).powf(inv);
        for &i in &interface {
            boundary_slack = boundary_slack.min(envelope - snap.u[i]);
        }
    }
    let margin = source_slack.min(boundary_slack) - 3.0 * est.residual;
    Ok(Certificate {
        region: region.clone(),
        k,
        holds: source_slack > 0.0 && margin >= 0.0,
        margin,
        source_slack,
        boundary_slack,
    })
}
