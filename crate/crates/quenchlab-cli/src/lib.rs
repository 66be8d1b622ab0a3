//! Command-line front end for the touchdown laboratory: configuration
//! loading, the five subcommands, and deterministic report/snapshot
//! output.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 numerical
//! or I/O error.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::{build_run, two_annulus_geometry, FileConfig, LoadedRun, RunKind};
use quenchlab::{
    bisect_critical_height, detect_touchdown_set, empirical_type_i_gamma, estimate_touchdown_time,
    lower_bound_touchdown_time, no_touchdown_certificate, perturbation_sweep, quench_threshold,
    rate_exponent_fit, run_all_checks, search_barrier_epsilon, solve, upper_bound_touchdown_time,
    Error, FloorRegion, Termination, Trajectory,
};
use report::{
    float_sig, render_bisect, render_simulate, render_snapshots, render_sweep, MonitorBlock,
    QuenchBlock, SimulateReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser)]
#[command(
    name = "quenchlab",
    version,
    about = "Touchdown laboratory for the parabolic MEMS model \
             u_t - Lap(u) = f(x) (1-u)^{-p}"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one configured run; write its report and optional snapshots
    Simulate {
        /// Run configuration (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Report destination (overrides [output].report; default stdout)
        #[arg(long)]
        report: Option<PathBuf>,
        /// Snapshot CSV destination (overrides [output].snapshots)
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Print closed-form touchdown-time bounds for a constant source level
    Bounds {
        /// Source exponent (> 0)
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        /// Space dimension (1, 2, or 3)
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Source level: f >= mu on the ball of radius r
        #[arg(long, allow_negative_numbers = true)]
        mu: f64,
        /// Radius of that ball
        #[arg(long, allow_negative_numbers = true)]
        r: f64,
    },
    /// Measure touchdown response to shrinking profile perturbations
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Bracket the critical plateau height of the two-annulus family
    Bisect {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the built-in invariant suite
    Verify {
        /// Seed for the randomized invariants
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A failed run, with the exit code its class maps to.
enum Failure {
    Validation(Vec<String>),
    Numerical(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

/// Errors raised once the run is underway (solves, fits, experiment
/// drivers, report writes) are numerical/runtime failures; everything
/// before that is validation.
fn runtime(e: Error) -> Failure {
    Failure::Numerical(e.to_string())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_OK,
                _ => EXIT_USAGE,
            };
            // clap renders help to stdout and errors to stderr.
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Simulate {
            config,
            report,
            snapshots,
        } => cmd_simulate(&config, report.as_deref(), snapshots.as_deref()),
        Cmd::Bounds { p, n, mu, r } => cmd_bounds(p, n, mu, r),
        Cmd::Sweep { config, report } => cmd_sweep(&config, report.as_deref()),
        Cmd::Bisect { config, report } => cmd_bisect(&config, report.as_deref()),
        Cmd::Verify { seed } => cmd_verify(seed),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Validation(msgs) => {
                    eprintln!("configuration error:");
                    for m in msgs {
                        eprintln!("  - {m}");
                    }
                }
                Failure::Numerical(msg) => eprintln!("run failed: {msg}"),
            }
            f.exit_code()
        }
    }
}

fn load(path: &Path, kind: RunKind) -> Result<LoadedRun, Failure> {
    let cfg = FileConfig::load(path).map_err(Failure::Validation)?;
    build_run(&cfg, kind).map_err(Failure::Validation)
}

/// Write to stdout; a consumer that closed the pipe ends the run quietly
/// instead of panicking, and any other write failure is a runtime error.
fn print_out(text: &str) -> Result<(), Failure> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(EXIT_OK),
        Err(e) => Err(Failure::Numerical(format!("cannot write stdout: {e}"))),
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), Failure> {
    match path {
        None => print_out(text),
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", p.display()))),
    }
}

fn cmd_simulate(
    config: &Path,
    report_flag: Option<&Path>,
    snapshots_flag: Option<&Path>,
) -> Result<(), Failure> {
    let run = load(config, RunKind::Simulate)?;
    let traj = solve(&run.profile, &run.solver, run.t_max).map_err(runtime)?;

    let p = run.solver.p;
    let t_lower = lower_bound_touchdown_time(p, &run.profile).map_err(runtime)?;
    let r_abs = run.analysis.upper_bound_r;
    let floor = FloorRegion::Ball {
        center: 0.0,
        radius: r_abs,
    };
    let mu_eff = run.profile.min_on(&floor).map_err(runtime)?;
    let n = run.grid.domain.dim();
    let t_upper = if mu_eff <= 0.0 {
        // The source floor vanishes on the reference ball: no bound applies.
        None
    } else {
        match upper_bound_touchdown_time(p, n, mu_eff, r_abs) {
            Ok(v) => Some(v),
            Err(Error::BoundInapplicable { .. }) => None,
            Err(e) => return Err(runtime(e)),
        }
    };

    let quench = if traj.terminated == Termination::QuenchStop {
        let est = estimate_touchdown_time(&traj).map_err(runtime)?;
        let set = detect_touchdown_set(&traj, &est, run.analysis.kappa_td).map_err(runtime)?;
        let gamma_emp = empirical_type_i_gamma(&traj, &est).map_err(runtime)?;
        let rate_exponent = rate_exponent_fit(&traj, &est).ok();
        Some(QuenchBlock {
            est,
            rate_exponent,
            gamma_emp,
            kappa_td: run.analysis.kappa_td,
            set,
        })
    } else {
        None
    };

    let mut certificates = Vec::new();
    if let Some(q) = &quench {
        for (region, k_spec) in &run.analysis.certificate_regions {
            let k = match k_spec {
                Some(k) => *k,
                None => q.gamma_emp * interface_depth(&traj, region).map_err(runtime)?,
            };
            let cert = no_touchdown_certificate(&traj, &q.est, region, k).map_err(runtime)?;
            certificates.push(cert);
        }
    }

    let monitor = match (&run.analysis.barrier, &quench) {
        (Some(barrier), Some(_)) => {
            let t0 = 0.5 / ((p + 1.0) * run.profile.max_value());
            let passed = search_barrier_epsilon(&traj, barrier, t0)
                .map_err(runtime)?
                .map(|(eps, _)| quenchlab::monitor_j(&traj, barrier, eps, t0).map(|rep| (eps, rep)))
                .transpose()
                .map_err(runtime)?;
            Some(MonitorBlock {
                center: barrier.center,
                radius: barrier.radius,
                t0,
                passed,
            })
        }
        _ => None,
    };

    let rendered = render_simulate(&SimulateReport {
        traj: &traj,
        t_lower,
        t_upper,
        upper_bound_r: r_abs,
        upper_bound_mu: mu_eff,
        quench,
        certificates,
        monitor,
    });
    let report_path = resolve_path(report_flag, run.output_report.as_deref());
    emit(&rendered, report_path.as_deref())?;

    if let Some(csv_path) = resolve_path(snapshots_flag, run.output_snapshots.as_deref()) {
        emit(&render_snapshots(&traj), Some(&csv_path))?;
    }
    Ok(())
}

/// Distance from the region's interface to the outer boundary: the default
/// scale for the certificate's decay constant, matching the one the
/// detector's second pass uses.
fn interface_depth(traj: &Trajectory, region: &quenchlab::Region) -> quenchlab::Result<f64> {
    let grid = &traj.grid;
    let depth = region
        .boundary_indices(grid)?
        .iter()
        .map(|&j| grid.boundary_distance(grid.nodes[j]).unwrap_or(0.0))
        .fold(f64::INFINITY, f64::min);
    if depth.is_finite() && depth > 0.0 {
        Ok(depth)
    } else {
        Err(Error::Geometry(format!(
            "certificate region {} has no interior interface",
            region.describe()
        )))
    }
}

fn resolve_path(flag: Option<&Path>, configured: Option<&str>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| configured.map(PathBuf::from))
}

fn cmd_bounds(p: f64, n: u32, mu: f64, r: f64) -> Result<(), Failure> {
    let mut violations = Vec::new();
    if !(p.is_finite() && p > 0.0) {
        violations.push(format!("--p > 0, got {p}"));
    }
    if !(1..=3).contains(&n) {
        violations.push(format!("--n ∈ {{1, 2, 3}}, got {n}"));
    }
    if !(mu.is_finite() && mu >= 0.0) {
        violations.push(format!("--mu ≥ 0, got {mu}"));
    }
    if !(r.is_finite() && r > 0.0) {
        violations.push(format!("--r > 0, got {r}"));
    }
    if !violations.is_empty() {
        return Err(Failure::Validation(violations));
    }
    let t_lower = if mu == 0.0 {
        f64::INFINITY
    } else {
        1.0 / ((p + 1.0) * mu)
    };
    // A zero level sits below every quench threshold: no upper bound.
    let t_upper = if mu == 0.0 {
        f64::NAN
    } else {
        match upper_bound_touchdown_time(p, n, mu, r) {
            Ok(v) => v,
            Err(Error::BoundInapplicable { .. }) => f64::NAN,
            Err(e) => return Err(Failure::Validation(vec![e.to_string()])),
        }
    };
    let mu0 = quench_threshold(p, n).map_err(|e| Failure::Validation(vec![e.to_string()]))?;
    print_out(&format!(
        "T_lower={}\nT_upper={}\nmu0={}\n",
        float_sig(t_lower, 7),
        float_sig(t_upper, 7),
        float_sig(mu0, 7)
    ))
}

fn cmd_sweep(config: &Path, report_flag: Option<&Path>) -> Result<(), Failure> {
    let run = load(config, RunKind::Sweep)?;
    let section = run.sweep.as_ref().expect("validated");
    let q = section.q.unwrap_or(2.0);
    let sweep = perturbation_sweep(&run.profile, &section.sizes, q, &run.solver, run.t_max)
        .map_err(runtime)?;
    let report_path = resolve_path(report_flag, run.output_report.as_deref());
    emit(&render_sweep(&sweep), report_path.as_deref())
}

fn cmd_bisect(config: &Path, report_flag: Option<&Path>) -> Result<(), Failure> {
    let cfg = FileConfig::load(config).map_err(Failure::Validation)?;
    let run = build_run(&cfg, RunKind::Bisect).map_err(Failure::Validation)?;
    let geom = two_annulus_geometry(&cfg.profile);
    let tol_h = run.bisect.as_ref().expect("validated").tol_h;
    let result =
        bisect_critical_height(&run.grid, &geom, &run.solver, run.t_max, tol_h).map_err(runtime)?;
    let report_path = resolve_path(report_flag, run.output_report.as_deref());
    emit(&render_bisect(&result), report_path.as_deref())
}

fn cmd_verify(seed: u64) -> Result<(), Failure> {
    use std::fmt::Write;
    let checks = run_all_checks(seed);
    let mut failed = 0usize;
    let mut lines = String::new();
    for c in &checks {
        let _ = writeln!(
            lines,
            "{} {} — {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
        if !c.passed {
            failed += 1;
        }
    }
    let _ = writeln!(
        lines,
        "{}/{} checks passed",
        checks.len() - failed,
        checks.len()
    );
    print_out(&lines)?;
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "{failed} invariant check(s) failed"
        )))
    }
}
