//! Time integration of `u_t - Lap(u) = f(x) (1 - u)^{-p}` from `u(0) = 0`
//! up to (numerical) touchdown.
//!
//! The scheme treats diffusion implicitly (one tridiagonal solve per step)
//! and the singular source explicitly at the old state.  The step size
//! follows the gap to touchdown: `dt` is capped at
//! `dt_safety * (1 - max u)^{p+1} / ((p+1) max f)`, which keeps the
//! explicit source increment a fixed fraction of the remaining gap.

use crate::domain::{Domain, Grid};
use crate::error::{Error, Result};
use crate::profile::Profile;

/// Integration parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Source exponent `p > 0`.
    pub p: f64,
    /// Step-size ceiling.
    pub dt_init: f64,
    /// Fraction of the gap-based cap actually taken, in (0, 1].
    pub dt_safety: f64,
    /// Stop once `1 - max u` falls to this value, in (0, 1).
    pub eps_stop: f64,
    /// Record a full state every this many accepted steps.
    pub snapshot_stride: usize,
    /// Number of trailing steps used by the touchdown-time fit.
    pub fit_window: usize,
    /// Testing aid: skip the diffusion solve so every interior node follows
    /// the pure source ODE.
    pub disable_diffusion: bool,
}

impl SolverConfig {
    pub fn new(p: f64) -> Result<Self> {
        let cfg = SolverConfig {
            p,
            dt_init: 1e-3,
            dt_safety: 0.1,
            eps_stop: 1e-4,
            snapshot_stride: 10,
            fit_window: 40,
            disable_diffusion: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::InvalidExponent(self.p));
        }
        let mut violations = Vec::new();
        if !(self.dt_init.is_finite() && self.dt_init > 0.0) {
            violations.push(format!("dt_init = {} must be positive", self.dt_init));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            violations.push(format!("dt_safety = {} must lie in (0, 1]", self.dt_safety));
        }
        if !(self.eps_stop > 0.0 && self.eps_stop < 1.0) {
            violations.push(format!("eps_stop = {} must lie in (0, 1)", self.eps_stop));
        }
        if self.snapshot_stride == 0 {
            violations.push("snapshot_stride must be at least 1".into());
        }
        if self.fit_window < 5 {
            violations.push(format!(
                "fit_window = {} must be at least 5",
                self.fit_window
            ));
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(violations.join("; ")))
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The gap `1 - max u` reached `eps_stop`: numerical touchdown.
    QuenchStop,
    /// The time horizon was exhausted first.
    TMaxReached,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::QuenchStop => "quench_stop",
            Termination::TMaxReached => "t_max_reached",
        }
    }
}

/// Scalar record kept for every accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub max_u: f64,
}

/// Full state record kept every `snapshot_stride` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
}

/// Output of a run: per-step scalars, periodic snapshots (always including
/// the initial and final states), and the inputs that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid,
    pub profile: Profile,
    pub config: SolverConfig,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
    pub terminated: Termination,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t)
    }

    pub fn final_state(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has snapshots")
    }

    pub fn max_u_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.max_u)
    }
}

fn max_of(u: &[f64]) -> f64 {
    u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Solve the tridiagonal system with sub/diag/super `(a, b, c)` in place.
fn thomas_solve(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64]) -> Result<()> {
    let n = d.len();
    let mut c_star = vec![0.0; n];
    let mut denom = b[0];
    if denom.abs() < 1e-300 {
        return Err(Error::LinearSolve("zero pivot in first row".into()));
    }
    c_star[0] = c[0] / denom;
    d[0] /= denom;
    for i in 1..n {
        denom = b[i] - a[i] * c_star[i - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::LinearSolve(format!("zero pivot in row {i}")));
        }
        c_star[i] = c[i] / denom;
        d[i] = (d[i] - a[i] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c_star[i] * d[i + 1];
    }
    Ok(())
}

/// One accepted step from state `u` at time `t`.  Returns the new state
/// and the step actually taken.  A candidate step is rejected (and `dt`
/// halved) if any node would reach 1 or the state would lose monotonicity;
/// persistent rejection down to the underflow floor is a stagnation error.
pub fn step(
    t: f64,
    u: &[f64],
    grid: &Grid,
    profile: &Profile,
    config: &SolverConfig,
) -> Result<(Vec<f64>, f64)> {
    let n_nodes = grid.num_nodes();
    if u.len() != n_nodes {
        return Err(Error::ShapeMismatch {
            expected: n_nodes,
            got: u.len(),
        });
    }
    let p = config.p;
    let max_u = max_of(u);
    let gap = 1.0 - max_u;
    if gap <= 0.0 {
        return Err(Error::InvalidParameter(
            "state is already at touchdown (max u >= 1)".into(),
        ));
    }
    let max_f = profile.max_value();
    let cap = if max_f > 0.0 {
        config.dt_safety * gap.powf(p + 1.0) / ((p + 1.0) * max_f)
    } else {
        f64::INFINITY
    };
    let dt_floor = 1e-14
        * if max_f > 0.0 {
            1.0 / ((p + 1.0) * max_f)
        } else {
            config.dt_init
        };
    let mut dt = config.dt_init.min(cap);

    let source: Vec<f64> = (0..n_nodes)
        .map(|i| {
            if grid.is_boundary(i) {
                0.0
            } else {
                profile.values[i] * (1.0 - u[i]).powf(-p)
            }
        })
        .collect();

    loop {
        if dt < dt_floor {
            return Err(Error::Stagnation { t, dt });
        }
        let candidate = advance(u, &source, dt, grid, config)?;
        let admissible = candidate.iter().all(|&v| v < 1.0)
            && candidate
                .iter()
                .zip(u)
                .all(|(&new, &old)| new >= old - 1e-10);
        if admissible {
            return Ok((candidate, dt));
        }
        dt *= 0.5;
    }
}

fn advance(
    u: &[f64],
    source: &[f64],
    dt: f64,
    grid: &Grid,
    config: &SolverConfig,
) -> Result<Vec<f64>> {
    let n_nodes = grid.num_nodes();
    let last = n_nodes - 1;
    if config.disable_diffusion {
        let mut out: Vec<f64> = u
            .iter()
            .zip(source)
            .map(|(&ui, &si)| ui + dt * si)
            .collect();
        for (i, v) in out.iter_mut().enumerate() {
            if grid.is_boundary(i) {
                *v = 0.0;
            }
        }
        return Ok(out);
    }

    // Assemble I - dt * Lap with identity rows on boundary nodes.
    let h = grid.h;
    let h2 = h * h;
    let mut sub = vec![0.0; n_nodes];
    let mut diag = vec![1.0; n_nodes];
    let mut sup = vec![0.0; n_nodes];
    let mut rhs: Vec<f64> = u
        .iter()
        .zip(source)
        .map(|(&ui, &si)| ui + dt * si)
        .collect();

    match grid.domain {
        Domain::Interval { .. } => {
            for i in 1..last {
                sub[i] = -dt / h2;
                diag[i] = 1.0 + 2.0 * dt / h2;
                sup[i] = -dt / h2;
            }
        }
        Domain::RadialBall { dim, .. } => {
            let n = dim as f64;
            diag[0] = 1.0 + 2.0 * n * dt / h2;
            sup[0] = -2.0 * n * dt / h2;
            for i in 1..last {
                let drift = (n - 1.0) / (2.0 * h * grid.nodes[i]);
                sub[i] = -dt * (1.0 / h2 - drift);
                diag[i] = 1.0 + 2.0 * dt / h2;
                sup[i] = -dt * (1.0 / h2 + drift);
            }
        }
    }
    for (i, v) in rhs.iter_mut().enumerate() {
        if grid.is_boundary(i) {
            *v = 0.0;
        }
    }
    thomas_solve(&sub, &diag, &sup, &mut rhs)?;
    Ok(rhs)
}

/// Run from `u = 0` until the gap reaches `eps_stop` or `t` passes `t_max`.
pub fn solve(profile: &Profile, config: &SolverConfig, t_max: f64) -> Result<Trajectory> {
    config.validate()?;
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t_max = {t_max} must be positive and finite"
        )));
    }
    let grid = profile.grid.clone();
    let mut u = vec![0.0; grid.num_nodes()];
    let mut t = 0.0;
    let mut snapshots = vec![Snapshot {
        t: 0.0,
        u: u.clone(),
    }];
    let mut steps: Vec<StepRecord> = Vec::new();

    let terminated = loop {
        let gap = 1.0 - max_of(&u);
        if gap <= config.eps_stop {
            break Termination::QuenchStop;
        }
        if t >= t_max {
            break Termination::TMaxReached;
        }
        let (next, dt) = step(t, &u, &grid, profile, config)?;
        t += dt;
        u = next;
        steps.push(StepRecord {
            t,
            dt,
            max_u: max_of(&u),
        });
        if steps.len().is_multiple_of(config.snapshot_stride) {
            snapshots.push(Snapshot { t, u: u.clone() });
        }
    };

    if snapshots.last().map(|s| s.t) != Some(t) {
        snapshots.push(Snapshot { t, u: u.clone() });
    }
    Ok(Trajectory {
        grid,
        profile: profile.clone(),
        config: config.clone(),
        snapshots,
        steps,
        terminated,
    })
}

/// Touchdown-time estimate from the tail of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchdownEstimate {
    /// Zero crossing of the fitted line: the estimated touchdown time.
    pub t_est: f64,
    /// Fitted slope of `(1 - max u)^{p+1}` against `t` (negative).
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Fit a line through `(t, (1 - max u)^{p+1})` over the last `fit_window`
/// accepted steps and extrapolate to zero.  Near touchdown that quantity
/// decays linearly, so the zero crossing estimates the touchdown time.
pub fn estimate_touchdown_time(traj: &Trajectory) -> Result<TouchdownEstimate> {
    if traj.terminated != Termination::QuenchStop {
        return Err(Error::Fit(
            "trajectory did not reach the stopping gap; no touchdown to extrapolate".into(),
        ));
    }
    let window = traj.config.fit_window;
    if traj.steps.len() < window {
        return Err(Error::Fit(format!(
            "need at least {window} accepted steps for the fit, have {}",
            traj.steps.len()
        )));
    }
    let p = traj.config.p;
    let tail = &traj.steps[traj.steps.len() - window..];
    let xs: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let ys: Vec<f64> = tail.iter().map(|s| (1.0 - s.max_u).powf(p + 1.0)).collect();

    let n = window as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - x_mean) * (y - y_mean);
        var += (x - x_mean) * (x - x_mean);
    }
    if var == 0.0 {
        return Err(Error::Fit("degenerate fit window (no time spread)".into()));
    }
    let slope = cov / var;
    if slope >= 0.0 {
        return Err(Error::Fit(format!(
            "fitted gap slope {slope:.3e} is nonnegative; the run shows no touchdown trend"
        )));
    }
    let intercept = y_mean - slope * x_mean;
    let mut ss = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let r = y - (intercept + slope * x);
        ss += r * r;
    }
    Ok(TouchdownEstimate {
        t_est: -intercept / slope,
        slope,
        residual: (ss / n).sqrt(),
    })
}

/// Touchdown time of the spatially homogeneous comparison ODE
/// `y' = c (1 - y)^{-p}`, `y(0) = 0`.
pub fn ode_touchdown_time(p: f64, c: f64) -> Result<f64> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::InvalidExponent(p));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "source level c = {c} must be positive"
        )));
    }
    Ok(1.0 / ((p + 1.0) * c))
}

/// Closed-form solution of the comparison ODE:
/// `y(t) = 1 - (1 - (p+1) c t)^{1/(p+1)}`, valid for `t < 1/((p+1) c)`.
pub fn ode_quench_solution(p: f64, c: f64, t: f64) -> Result<f64> {
    let t_star = ode_touchdown_time(p, c)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time t = {t} must be nonnegative"
        )));
    }
    if t >= t_star {
        return Err(Error::InvalidParameter(format!(
            "time t = {t} is at or beyond the ODE touchdown time {t_star}"
        )));
    }
    let arg = 1.0 - (p + 1.0) * c * t;
    Ok(1.0 - arg.powf(1.0 / (p + 1.0)))
}
