//! Strict run configuration: a TOML file with sections for the domain,
//! the profile, the solver, analysis options, and the experiments.
//! Unknown keys are rejected, and validation reports every violation
//! with its constraint rather than stopping at the first.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

use quenchlab::{
    build_grid, harmonic_barrier, make_convex, make_m_shaped, make_one_well, make_two_annulus,
    make_two_bump, Barrier, Domain, Grid, Profile, Region, SolverConfig, TwoAnnulusGeometry,
    KAPPA_TD_DEFAULT,
};

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Reserved for invariant-suite sampling; recorded but not used by the
    /// deterministic run commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub domain: DomainSection,
    pub profile: ProfileSection,
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bisect: Option<BisectSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    /// "interval" for (-radius, radius), "radial" for the ball of the
    /// given radius in `dim` dimensions.
    pub kind: String,
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<u32>,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub family: String,
    // constant
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    // m_shaped / one_well
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub well_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_boundary: Option<f64>,
    // two_bump
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    // convex
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    // two_annulus
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_safety: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disable_diffusion: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Relative gap threshold of the touchdown-set detector (default 8).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_td: Option<f64>,
    /// Radius of the centered ball used for the closed-form upper bound
    /// (default 0.9 * domain radius).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper_bound_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificates: Option<Vec<CertificateSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_monitor: Option<JMonitorSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    /// "centered_ball" (radius), "collar" (inner), or "interval" (lo, hi).
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    /// Decay constant; when omitted it is chosen as the empirical type-I
    /// constant times the interface's distance to the outer boundary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct JMonitorSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sizes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BisectSection {
    pub tol_h: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<String>,
}

impl FileConfig {
    /// Parse the file at `path`; syntax and schema errors carry the TOML
    /// position information.
    pub fn load(path: &Path) -> Result<FileConfig, Vec<String>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
        toml::from_str(&text).map_err(|e| vec![format!("{}: {e}", path.display())])
    }
}

/// Analysis options with defaults resolved, ready for the simulate driver.
#[derive(Debug)]
pub struct AnalysisPlan {
    pub kappa_td: f64,
    pub upper_bound_r: f64,
    pub certificate_regions: Vec<(Region, Option<f64>)>,
    pub barrier: Option<Barrier>,
}

/// A validated configuration turned into core objects.
#[derive(Debug)]
pub struct LoadedRun {
    pub grid: Grid,
    pub profile: Profile,
    pub solver: SolverConfig,
    pub t_max: f64,
    pub analysis: AnalysisPlan,
    pub sweep: Option<SweepSection>,
    pub bisect: Option<BisectSection>,
    pub output_report: Option<String>,
    pub output_snapshots: Option<String>,
}

/// Which profile parameters each family consumes.
fn family_keys(family: &str) -> Option<&'static [&'static str]> {
    match family {
        "constant" => Some(&["value"]),
        "m_shaped" => Some(&["f0", "f_max", "l", "ramp_width"]),
        "one_well" => Some(&["f0", "f_max", "well_width", "l", "f_boundary"]),
        "two_bump" => Some(&["r", "eps", "a", "eta"]),
        "convex" => Some(&["mu", "lambda"]),
        "two_annulus" => Some(&["r1", "r2", "half_width", "mu", "eta", "h"]),
        _ => None,
    }
}

fn present_keys(p: &ProfileSection) -> Vec<&'static str> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, set: bool| {
        if set {
            out.push(name);
        }
    };
    push("value", p.value.is_some());
    push("f0", p.f0.is_some());
    push("f_max", p.f_max.is_some());
    push("l", p.l.is_some());
    push("ramp_width", p.ramp_width.is_some());
    push("well_width", p.well_width.is_some());
    push("f_boundary", p.f_boundary.is_some());
    push("r", p.r.is_some());
    push("eps", p.eps.is_some());
    push("a", p.a.is_some());
    push("eta", p.eta.is_some());
    push("mu", p.mu.is_some());
    push("lambda", p.lambda.is_some());
    push("r1", p.r1.is_some());
    push("r2", p.r2.is_some());
    push("half_width", p.half_width.is_some());
    push("h", p.h.is_some());
    out
}

/// The subcommand the configuration is being validated for; `bisect`
/// chooses the two-annulus height itself, so `profile.h` is forbidden
/// there and required otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Simulate,
    Sweep,
    Bisect,
}

/// Validate `cfg` and build the core objects.  On failure, every violated
/// constraint is reported.
pub fn build_run(cfg: &FileConfig, kind: RunKind) -> Result<LoadedRun, Vec<String>> {
    let mut violations: Vec<String> = Vec::new();

    // --- domain ---
    let radius = cfg.domain.radius;
    if !(radius.is_finite() && radius > 0.0) {
        violations.push(format!("domain.radius > 0, got {radius}"));
    }
    if cfg.domain.cells < 3 {
        violations.push(format!("domain.cells ≥ 3, got {}", cfg.domain.cells));
    }
    let domain = match cfg.domain.kind.as_str() {
        "interval" => {
            if cfg.domain.dim.is_some() {
                violations.push("domain.dim applies only to kind = \"radial\"".into());
            }
            Some(Domain::Interval { radius })
        }
        "radial" => match cfg.domain.dim {
            Some(dim @ 1..=3) => Some(Domain::RadialBall { radius, dim }),
            Some(dim) => {
                violations.push(format!("domain.dim ∈ {{1, 2, 3}}, got {dim}"));
                None
            }
            None => {
                violations.push("domain.dim is required when kind = \"radial\"".into());
                None
            }
        },
        other => {
            violations.push(format!(
                "domain.kind ∈ {{\"interval\", \"radial\"}}, got \"{other}\""
            ));
            None
        }
    };
    let grid = match domain {
        Some(d) if violations.is_empty() => match build_grid(d, cfg.domain.cells) {
            Ok(g) => Some(g),
            Err(e) => {
                violations.push(format!("domain: {e}"));
                None
            }
        },
        _ => None,
    };

    // --- solver ---
    let s = &cfg.solver;
    if !(s.p.is_finite() && s.p > 0.0) {
        violations.push(format!("solver.p > 0, got {}", s.p));
    }
    if let Some(v) = s.dt_init {
        if !(v.is_finite() && v > 0.0) {
            violations.push(format!("solver.dt_init > 0, got {v}"));
        }
    }
    if let Some(v) = s.dt_safety {
        if !(v > 0.0 && v <= 1.0) {
            violations.push(format!("solver.dt_safety ∈ (0,1], got {v}"));
        }
    }
    if let Some(v) = s.eps_stop {
        if !(v > 0.0 && v < 1.0) {
            violations.push(format!("solver.eps_stop ∈ (0,1), got {v}"));
        }
    }
    if let Some(v) = s.snapshot_stride {
        if v == 0 {
            violations.push("solver.snapshot_stride ≥ 1, got 0".into());
        }
    }
    if let Some(v) = s.fit_window {
        if v < 5 {
            violations.push(format!("solver.fit_window ≥ 5, got {v}"));
        }
    }
    let t_max = s.t_max.unwrap_or(10.0);
    if !(t_max.is_finite() && t_max > 0.0) {
        violations.push(format!("solver.t_max > 0, got {t_max}"));
    }
    let solver = if s.p.is_finite() && s.p > 0.0 {
        match SolverConfig::new(s.p) {
            Ok(mut c) => {
                if let Some(v) = s.dt_init {
                    c.dt_init = v;
                }
                if let Some(v) = s.dt_safety {
                    c.dt_safety = v;
                }
                if let Some(v) = s.eps_stop {
                    c.eps_stop = v;
                }
                if let Some(v) = s.snapshot_stride {
                    c.snapshot_stride = v;
                }
                if let Some(v) = s.fit_window {
                    c.fit_window = v;
                }
                if let Some(v) = s.disable_diffusion {
                    c.disable_diffusion = v;
                }
                match c.validate() {
                    Ok(()) => Some(c),
                    Err(_) => None, // already reported field by field above
                }
            }
            Err(e) => {
                violations.push(format!("solver: {e}"));
                None
            }
        }
    } else {
        None
    };

    // --- profile ---
    let fam = cfg.profile.family.as_str();
    let profile = match family_keys(fam) {
        None => {
            violations.push(format!(
                "profile.family ∈ {{\"constant\", \"m_shaped\", \"one_well\", \"two_bump\", \
                 \"convex\", \"two_annulus\"}}, got \"{fam}\""
            ));
            None
        }
        Some(allowed) => {
            let allowed_set: BTreeSet<&str> = allowed.iter().copied().collect();
            let present = present_keys(&cfg.profile);
            let mut missing: Vec<&str> = allowed
                .iter()
                .copied()
                .filter(|k| !present.contains(k))
                .collect();
            if kind == RunKind::Bisect && fam == "two_annulus" {
                missing.retain(|&k| k != "h");
                if cfg.profile.h.is_some() {
                    violations.push("profile.h is chosen by the bisection; remove it".into());
                }
            }
            for k in &missing {
                violations.push(format!("profile.{k} is required by family \"{fam}\""));
            }
            for k in &present {
                if !allowed_set.contains(k) {
                    violations.push(format!(
                        "profile.{k} is not a parameter of family \"{fam}\""
                    ));
                }
            }
            match (&grid, missing.is_empty()) {
                (Some(g), true) => {
                    let built = match fam {
                        "constant" => Profile::constant(g.clone(), cfg.profile.value.unwrap()),
                        "m_shaped" => make_m_shaped(
                            g,
                            cfg.profile.f0.unwrap(),
                            cfg.profile.f_max.unwrap(),
                            cfg.profile.l.unwrap(),
                            cfg.profile.ramp_width.unwrap(),
                        ),
                        "one_well" => make_one_well(
                            g,
                            cfg.profile.f0.unwrap(),
                            cfg.profile.f_max.unwrap(),
                            cfg.profile.well_width.unwrap(),
                            cfg.profile.l.unwrap(),
                            cfg.profile.f_boundary.unwrap(),
                        ),
                        "two_bump" => make_two_bump(
                            g,
                            cfg.profile.r.unwrap(),
                            cfg.profile.eps.unwrap(),
                            cfg.profile.a.unwrap(),
                            cfg.profile.eta.unwrap(),
                        ),
                        "convex" => {
                            make_convex(g, cfg.profile.mu.unwrap(), cfg.profile.lambda.unwrap())
                        }
                        "two_annulus" => {
                            let geom = two_annulus_geometry(&cfg.profile);
                            // For the bisection the height is scanned, so
                            // validate with a midrange stand-in.
                            let h = cfg.profile.h.unwrap_or(geom.mu);
                            make_two_annulus(g, h, &geom)
                        }
                        _ => unreachable!(),
                    };
                    match built {
                        Ok(p) => Some(p),
                        Err(e) => {
                            violations.push(format!("profile: {e}"));
                            None
                        }
                    }
                }
                _ => None,
            }
        }
    };

    // --- analysis ---
    let mut plan = AnalysisPlan {
        kappa_td: KAPPA_TD_DEFAULT,
        upper_bound_r: 0.9 * radius,
        certificate_regions: Vec::new(),
        barrier: None,
    };
    if let Some(a) = &cfg.analysis {
        if let Some(k) = a.kappa_td {
            if !(k.is_finite() && k >= 1.0) {
                violations.push(format!("analysis.kappa_td ≥ 1, got {k}"));
            } else {
                plan.kappa_td = k;
            }
        }
        if let Some(r) = a.upper_bound_r {
            if !(r.is_finite() && r > 0.0 && r < radius) {
                violations.push(format!(
                    "analysis.upper_bound_r ∈ (0, domain.radius), got {r}"
                ));
            } else {
                plan.upper_bound_r = r;
            }
        }
        for (i, spec) in a.certificates.iter().flatten().enumerate() {
            match certificate_region(spec, radius) {
                Ok(region) => {
                    if let Some(k) = spec.k {
                        if !(k.is_finite() && k > 0.0) {
                            violations.push(format!("analysis.certificates[{i}].k > 0, got {k}"));
                            continue;
                        }
                    }
                    plan.certificate_regions.push((region, spec.k));
                }
                Err(msg) => violations.push(format!("analysis.certificates[{i}]: {msg}")),
            }
        }
        if let Some(m) = &a.j_monitor {
            let center = m.center.unwrap_or(0.0);
            if !(m.radius.is_finite() && m.radius > 0.0 && m.radius < radius) {
                violations.push(format!(
                    "analysis.j_monitor.radius ∈ (0, domain.radius), got {}",
                    m.radius
                ));
            } else if let (Some(g), Some(sv)) = (&grid, &solver) {
                match harmonic_barrier(g, center, m.radius, sv.p) {
                    Ok(b) => plan.barrier = Some(b),
                    Err(e) => violations.push(format!("analysis.j_monitor: {e}")),
                }
            }
        }
    }

    // --- experiments ---
    if let Some(sw) = &cfg.sweep {
        if sw.sizes.is_empty() {
            violations.push("sweep.sizes must not be empty".into());
        }
        for (i, &e) in sw.sizes.iter().enumerate() {
            if !(e.is_finite() && e > 0.0) {
                violations.push(format!("sweep.sizes[{i}] > 0, got {e}"));
            }
        }
        if let Some(q) = sw.q {
            if !(q.is_finite() && q >= 1.0) {
                violations.push(format!("sweep.q ≥ 1, got {q}"));
            }
        }
    } else if kind == RunKind::Sweep {
        violations.push("sweep requires a [sweep] section".into());
    }
    if let Some(b) = &cfg.bisect {
        if !(b.tol_h.is_finite() && b.tol_h > 0.0) {
            violations.push(format!("bisect.tol_h > 0, got {}", b.tol_h));
        }
    } else if kind == RunKind::Bisect {
        violations.push("bisect requires a [bisect] section".into());
    }
    if kind == RunKind::Bisect && fam != "two_annulus" && family_keys(fam).is_some() {
        violations.push(format!(
            "bisect requires profile.family = \"two_annulus\", got \"{fam}\""
        ));
    }

    if !violations.is_empty() {
        return Err(violations);
    }
    let (grid, profile, solver) = match (grid, profile, solver) {
        (Some(g), Some(p), Some(s)) => (g, p, s),
        // Any missing piece must have recorded a violation above.
        _ => return Err(vec!["internal: validation passed without a run".into()]),
    };
    Ok(LoadedRun {
        grid,
        profile,
        solver,
        t_max,
        analysis: plan,
        sweep: cfg.sweep.clone(),
        bisect: cfg.bisect.clone(),
        output_report: cfg.output.as_ref().and_then(|o| o.report.clone()),
        output_snapshots: cfg.output.as_ref().and_then(|o| o.snapshots.clone()),
    })
}

pub fn two_annulus_geometry(p: &ProfileSection) -> TwoAnnulusGeometry {
    TwoAnnulusGeometry {
        r1: p.r1.unwrap(),
        r2: p.r2.unwrap(),
        half_width: p.half_width.unwrap(),
        mu: p.mu.unwrap(),
        eta: p.eta.unwrap(),
    }
}

fn certificate_region(spec: &CertificateSpec, radius: f64) -> Result<Region, String> {
    let require = |cond: bool, msg: &str| -> Result<(), String> {
        if cond {
            Ok(())
        } else {
            Err(msg.to_string())
        }
    };
    match spec.kind.as_str() {
        "centered_ball" => {
            let r = spec.radius.ok_or("radius is required for centered_ball")?;
            require(
                spec.inner.is_none(),
                "inner does not apply to centered_ball",
            )?;
            require(
                spec.lo.is_none() && spec.hi.is_none(),
                "lo/hi do not apply to centered_ball",
            )?;
            require(
                r.is_finite() && r > 0.0 && r < radius,
                &format!("radius ∈ (0, domain.radius), got {r}"),
            )?;
            Ok(Region::CenteredBall { radius: r })
        }
        "collar" => {
            let inner = spec.inner.ok_or("inner is required for collar")?;
            require(spec.radius.is_none(), "radius does not apply to collar")?;
            require(
                spec.lo.is_none() && spec.hi.is_none(),
                "lo/hi do not apply to collar",
            )?;
            require(
                inner.is_finite() && inner > 0.0 && inner < radius,
                &format!("inner ∈ (0, domain.radius), got {inner}"),
            )?;
            Ok(Region::Collar { inner })
        }
        "interval" => {
            let lo = spec.lo.ok_or("lo is required for interval")?;
            let hi = spec.hi.ok_or("hi is required for interval")?;
            require(
                spec.radius.is_none() && spec.inner.is_none(),
                "radius/inner do not apply to interval",
            )?;
            require(
                lo.is_finite() && hi.is_finite() && lo < hi,
                &format!("need lo < hi, got [{lo}, {hi}]"),
            )?;
            Ok(Region::Interval { lo, hi })
        }
        other => Err(format!(
            "kind ∈ {{\"centered_ball\", \"collar\", \"interval\"}}, got \"{other}\""
        )),
    }
}
