//! End-to-end tests of the installed binary: exit codes, report and
//! snapshot formats, validation messages, and byte determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quenchlab::{quench_threshold, upper_bound_touchdown_time};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quenchlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary launches")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, body).expect("config written");
    path
}

fn parse_report(path: &Path) -> toml::Value {
    let text = std::fs::read_to_string(path).expect("report readable");
    text.parse::<toml::Value>()
        .unwrap_or_else(|e| panic!("report is not valid TOML: {e}\n{text}"))
}

fn report_f64(report: &toml::Value, key: &str) -> f64 {
    report
        .get(key)
        .unwrap_or_else(|| panic!("report key {key} missing"))
        .as_float()
        .unwrap_or_else(|| panic!("report key {key} is not a float"))
}

const CONSTANT_RUN: &str = r#"
[domain]
kind = "interval"
radius = 1.0
cells = 200

[profile]
family = "constant"
value = 10.0

[solver]
p = 2.0
"#;

#[test]
fn bounds_match_closed_forms() {
    let out = run(&["bounds", "--p", "2", "--mu", "10", "--r", "0.9"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let mut t_lower = None;
    let mut t_upper = None;
    let mut mu0 = None;
    for line in text.lines() {
        if let Some(v) = line.strip_prefix("T_lower=") {
            t_lower = Some(v.parse::<f64>().expect("T_lower parses"));
        } else if let Some(v) = line.strip_prefix("T_upper=") {
            t_upper = Some(v.parse::<f64>().expect("T_upper parses"));
        } else if let Some(v) = line.strip_prefix("mu0=") {
            mu0 = Some(v.parse::<f64>().expect("mu0 parses"));
        }
    }
    let t_lower = t_lower.expect("T_lower line present");
    let t_upper = t_upper.expect("T_upper line present");
    let mu0 = mu0.expect("mu0 line present");
    // Printed with 7 significant digits, so compare at that precision.
    let expect_upper = upper_bound_touchdown_time(2.0, 1, 10.0, 0.9).unwrap();
    let expect_mu0 = quench_threshold(2.0, 1).unwrap();
    assert!(
        (t_lower - 1.0 / 30.0).abs() <= 1e-6 * t_lower,
        "T_lower = {t_lower}, want 1/30"
    );
    assert!(
        (t_upper - expect_upper).abs() <= 1e-6 * t_upper,
        "T_upper = {t_upper}, want {expect_upper}"
    );
    assert!(
        (mu0 - expect_mu0).abs() <= 1e-6 * mu0,
        "mu0 = {mu0}, want {expect_mu0}"
    );
    assert!(
        t_lower < t_upper,
        "bounds must sandwich: {t_lower} vs {t_upper}"
    );
}

#[test]
fn bounds_below_threshold_has_no_upper_bound() {
    let out = run(&["bounds", "--p", "2", "--mu", "0.2", "--r", "0.9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.contains("T_upper=nan"),
        "level below threshold must print nan: {text}"
    );

    let out = run(&["bounds", "--p", "2", "--mu", "0", "--r", "0.9"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stdout(&out).contains("T_lower=inf"),
        "zero source never quenches: {}",
        stdout(&out)
    );
}

#[test]
fn bounds_rejects_bad_arguments() {
    let out = run(&["bounds", "--p", "2", "--mu", "-1", "--r", "0.9"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("--mu"), "stderr: {}", stderr(&out));

    let out = run(&["bounds", "--p", "2", "--n", "5", "--mu", "1", "--r", "0.9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--n"), "stderr: {}", stderr(&out));
}

#[test]
fn help_and_version_exit_zero() {
    for args in [
        &["--help"][..],
        &["--version"][..],
        &["simulate", "--help"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "args {args:?}");
    }
}

#[test]
fn usage_errors_exit_one() {
    // Unknown subcommand, missing required argument, malformed number.
    for args in [
        &["frobnicate"][..],
        &["simulate"][..],
        &["bounds", "--p", "two", "--mu", "1", "--r", "0.5"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
}

#[test]
fn simulate_writes_report_and_sorted_snapshots() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", CONSTANT_RUN);
    let report_path = dir.path().join("report.toml");
    let csv_path = dir.path().join("run.csv");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
        "--snapshots",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let report = parse_report(&report_path);
    assert_eq!(
        report.get("terminated").and_then(|v| v.as_str()),
        Some("quench_stop")
    );
    let t_lower = report_f64(&report, "T_lower");
    let t_upper = report_f64(&report, "T_upper");
    let t_est = report_f64(&report, "T_est");
    assert!(
        t_lower <= t_est && t_est <= t_upper,
        "estimate must sit inside the closed-form bounds: \
         {t_lower} <= {t_est} <= {t_upper}"
    );
    assert!(report_f64(&report, "gamma_emp") > 0.0);
    let set = report
        .get("touchdown_set")
        .and_then(|v| v.as_array())
        .expect("touchdown_set array");
    assert!(!set.is_empty(), "constant source must touch down");

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("t,x,u\n"), "header row first");
    assert!(
        csv.ends_with('\n') && !csv.contains('\r'),
        "unix line endings"
    );
    let rows: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 3, "row has t,x,u: {line}");
            (
                fields[0].parse::<f64>().expect("t parses"),
                fields[1].parse::<f64>().expect("x parses"),
            )
        })
        .collect();
    let nodes = 201; // cells + 1
    assert!(rows.len().is_multiple_of(nodes) && !rows.is_empty());
    for pair in rows.windows(2) {
        let ((t0, x0), (t1, x1)) = (pair[0], pair[1]);
        assert!(
            t0 < t1 || (t0 == t1 && x0 < x1),
            "rows must be sorted by (t, x): ({t0}, {x0}) then ({t1}, {x1})"
        );
    }
}

#[test]
fn simulate_output_is_byte_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", CONSTANT_RUN);
    let mut artifacts = Vec::new();
    for tag in ["a", "b"] {
        let report = dir.path().join(format!("report-{tag}.toml"));
        let csv = dir.path().join(format!("run-{tag}.csv"));
        let out = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
            "--snapshots",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        artifacts.push((
            std::fs::read(&report).unwrap(),
            std::fs::read(&csv).unwrap(),
        ));
    }
    assert_eq!(
        artifacts[0].0, artifacts[1].0,
        "reports differ between runs"
    );
    assert_eq!(
        artifacts[0].1, artifacts[1].1,
        "snapshots differ between runs"
    );
}

#[test]
fn report_floats_carry_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", CONSTANT_RUN);
    let report_path = dir.path().join("report.toml");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&report_path).unwrap();
    let line = text
        .lines()
        .find(|l| l.starts_with("T_est = "))
        .expect("T_est line");
    let value = line.trim_start_matches("T_est = ");
    let (mantissa, _) = value.split_once('e').expect("scientific notation");
    let frac = mantissa.split_once('.').expect("decimal point").1;
    assert_eq!(
        frac.len(),
        16,
        "want 16 fractional digits (17 significant): {value}"
    );
}

#[test]
fn simulate_honors_config_output_paths_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let configured = dir.path().join("from-config.toml");
    let body = format!(
        "{CONSTANT_RUN}\n[output]\nreport = {:?}\n",
        configured.to_str().unwrap()
    );
    let cfg = write_config(&dir, "run.toml", &body);

    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(configured.exists(), "report lands at the configured path");
    assert!(
        stdout(&out).is_empty(),
        "nothing on stdout when a path is set"
    );

    let flagged = dir.path().join("from-flag.toml");
    std::fs::remove_file(&configured).unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        flagged.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(flagged.exists(), "--report overrides the configured path");
    assert!(!configured.exists(), "configured path must not be written");
}

#[test]
fn simulate_without_quench_reports_t_max() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "calm.toml",
        r#"
[domain]
kind = "interval"
radius = 1.0
cells = 120

[profile]
family = "constant"
value = 0.2

[solver]
p = 2.0
t_max = 0.5
"#,
    );
    let report_path = dir.path().join("report.toml");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report = parse_report(&report_path);
    assert_eq!(
        report.get("terminated").and_then(|v| v.as_str()),
        Some("t_max_reached")
    );
    assert!(
        report.get("T_est").is_none(),
        "no touchdown estimate without a quench stop"
    );
    // The level sits below the quench threshold, so no upper bound applies.
    assert!(report_f64(&report, "T_upper").is_nan());
    assert!(!report_f64(&report, "T_lower").is_nan());
}

#[test]
fn validation_failures_are_listed_together() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bad.toml",
        r#"
[domain]
kind = "interval"
radius = 1.0
cells = 2

[profile]
family = "constant"
value = 10.0

[solver]
p = 2.0
eps_stop = 2.0
dt_safety = 0.0
"#,
    );
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    for needle in ["domain.cells ≥ 3", "eps_stop ∈ (0,1)", "dt_safety ∈ (0,1]"] {
        assert!(err.contains(needle), "missing {needle:?} in: {err}");
    }
}

#[test]
fn config_file_problems_exit_two() {
    let dir = TempDir::new().unwrap();
    let syntax = write_config(&dir, "syntax.toml", "[domain\nkind = \"interval\"\n");
    let out = run(&["simulate", "--config", syntax.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("line 1"),
        "parse error should carry a position: {}",
        stderr(&out)
    );

    let unknown = write_config(
        &dir,
        "unknown.toml",
        &format!("{CONSTANT_RUN}\n[solver2]\nx = 1\n"),
    );
    let out = run(&["simulate", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("solver2"),
        "unknown section named: {}",
        stderr(&out)
    );

    let missing = dir.path().join("does-not-exist.toml");
    let out = run(&["simulate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_three() {
    let dir = TempDir::new().unwrap();
    // A safety factor this small drives the adaptive step below the
    // stagnation floor before the stopping gap is reached.
    let cfg = write_config(
        &dir,
        "stagnate.toml",
        r#"
[domain]
kind = "interval"
radius = 1.0
cells = 100

[profile]
family = "constant"
value = 10.0

[solver]
p = 2.0
dt_safety = 0.005
"#,
    );
    let out = run(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("stagnated"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn unwritable_report_path_exits_three() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "run.toml", CONSTANT_RUN);
    let bad = dir.path().join("no-such-dir").join("report.toml");
    let out = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("cannot write"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn sweep_cli_reports_shrinking_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "sweep.toml",
        r#"
[domain]
kind = "interval"
radius = 1.0
cells = 200

[profile]
family = "two_bump"
r = 0.5
eps = 0.2
a = 5.0
eta = 1.0

[solver]
p = 2.0

[sweep]
sizes = [0.2, 0.1]
"#,
    );
    let report_path = dir.path().join("sweep-report.toml");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report = parse_report(&report_path);
    assert_eq!(
        report.get("command").and_then(|v| v.as_str()),
        Some("sweep")
    );
    let rows = report
        .get("rows")
        .and_then(|v| v.as_array())
        .expect("rows table array");
    assert_eq!(rows.len(), 2);
    let eps: Vec<f64> = rows
        .iter()
        .map(|r| r.get("eps").unwrap().as_float().unwrap())
        .collect();
    assert!(eps[0] > eps[1], "rows keep the given size order");
    assert!(report_f64(&report, "t_base") > 0.0);
}

#[test]
fn sweep_requires_its_section() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "plain.toml", CONSTANT_RUN);
    let out = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sweep"), "stderr: {}", stderr(&out));
}

#[test]
fn bisect_cli_brackets_the_critical_height() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bisect.toml",
        r#"
[domain]
kind = "interval"
radius = 1.0
cells = 201

[profile]
family = "two_annulus"
r1 = 0.3
r2 = 0.65
half_width = 0.05
mu = 25.0
eta = 1.0

[solver]
p = 2.0

[bisect]
tol_h = 2.0
"#,
    );
    let report_path = dir.path().join("bisect-report.toml");
    let out = run(&[
        "bisect",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let report = parse_report(&report_path);
    let lower = report_f64(&report, "lower_h");
    let upper = report_f64(&report, "upper_h");
    assert!(lower < upper, "bracket is ordered: {lower} vs {upper}");
    assert!(
        report_f64(&report, "bracket_width") <= 2.0,
        "bisection met its tolerance"
    );
    let probes = report
        .get("probes")
        .and_then(|v| v.as_array())
        .expect("probes recorded");
    assert!(probes.len() >= 3);
    for probe in probes {
        assert!(probe.get("hits_inner").unwrap().as_bool().is_some());
        assert!(probe.get("hits_outer").unwrap().as_bool().is_some());
    }
}

#[test]
fn bisect_rejects_a_fixed_height() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "bisect-h.toml",
        r#"
[domain]
kind = "interval"
radius = 1.0
cells = 201

[profile]
family = "two_annulus"
r1 = 0.3
r2 = 0.65
half_width = 0.05
mu = 25.0
eta = 1.0
h = 30.0

[solver]
p = 2.0

[bisect]
tol_h = 2.0
"#,
    );
    let out = run(&["bisect", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("profile.h"),
        "stderr: {}",
        stderr(&out)
    );
}

#[test]
fn closed_stdout_pipe_does_not_panic() {
    // `verify | head -1`: the binary keeps writing after head exits and
    // must treat the broken pipe as a normal end of output.
    let out = Command::new("sh")
        .arg("-c")
        .arg(format!(
            "{} verify --seed 0 | head -1",
            env!("CARGO_BIN_EXE_quenchlab")
        ))
        .output()
        .expect("shell runs");
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(
        !stderr(&out).contains("panicked"),
        "stderr: {}",
        stderr(&out)
    );
    assert!(stdout(&out).starts_with("PASS"), "stdout: {}", stdout(&out));
}

#[test]
fn verify_suite_passes_from_the_cli() {
    let out = run(&["verify", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("checks passed"), "summary line: {text}");
    assert!(
        !text.lines().any(|l| l.starts_with("FAIL")),
        "no failing checks: {text}"
    );
}
