use std::path::Path;
use std::process::{Command, Output};

use pdpiag::certificates::{auto_stepsize, theta_range, ProblemConstants, Theorem};
use pdpiag::problem::{quadratic_quadratic, QuadraticParams};
use pdpiag_bench::config::{parse_config, Format};
use pdpiag_bench::experiment::{evaluate_gap, IterateFile};
use pdpiag_bench::{run_experiment, sweep, ExitStatus, RunOptions};

fn cli(args: &[&str], dir: &Path, env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pdpiag"));
    cmd.args(args).current_dir(dir);
    for var in ["PDPIAG_SEED", "PDPIAG_FORCE", "PDPIAG_OUT_DIR", "PDPIAG_WORKERS"] {
        cmd.env_remove(var);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        out_dir: dir.to_path_buf(),
        force: false,
    }
}

const RANDOM_T: &str = "[problem]\nfamily = \"quadratic-quadratic\"\nseed = 2\n\n[solver]\nvariant = \"thm1\"\nmax_iters = 300\nschedule = { kind = \"random_bounded\", max_delay = 0, p = 0.5, seed = 1 }\n\n[analysis]\ngap_checkpoints = [10, 100]\n";

#[test]
fn run_writes_schema_valid_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(RANDOM_T, Format::Toml).unwrap();
    let outcome = run_experiment(&config, &opts(tmp.path())).unwrap();
    assert_eq!(outcome.status, ExitStatus::Pass);
    assert_eq!(outcome.artifacts.len(), 3);

    let trace = std::fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "k,dist_x,dist_y,V_k,gap,gap_bound,thm_bound,wall_ms");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 301);
    assert!(rows.iter().all(|r| r.len() == 8 && r[6].parse::<f64>().is_ok()));
    assert!(rows[100][4].parse::<f64>().is_ok() && rows[100][5].parse::<f64>().is_ok());
    assert_eq!(rows[99][4], "");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["exit_code"], 0);
    assert_eq!(summary["certified"], true);
    let checks = summary["parameters"]["certificate"]["checks"].as_array().unwrap();
    for c in checks {
        for field in ["name", "lhs", "rhs", "satisfied", "slack"] {
            assert!(c.get(field).is_some(), "missing {field}");
        }
    }
    assert!(summary["final_residuals"]["dist"].as_f64().unwrap() < 10.0);
    assert!(summary["sup_primal_distance"].as_f64().is_some());
    assert_eq!(summary["monitors"].as_array().unwrap().len(), 2);

    let plot = std::fs::read_to_string(tmp.path().join("plotdata.csv")).unwrap();
    assert!(plot.starts_with("series,x,value,bound\n"));
    assert_eq!(plot.lines().filter(|l| l.starts_with("gap,")).count(), 2);
    assert_eq!(plot.lines().filter(|l| l.starts_with("dist,")).count(), 301);
}

#[test]
fn forced_uncertified_run_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = parse_config(RANDOM_T, Format::Toml).unwrap();
    config.solver.sigma = pdpiag_bench::config::AutoOr::Value(0.2);
    config.solver.tau = pdpiag_bench::config::AutoOr::Value(0.2);
    let refused = run_experiment(&config, &opts(tmp.path())).unwrap();
    assert_eq!(refused.status, ExitStatus::CertificateFail);
    assert!(refused.trace.is_none());
    let forced = run_experiment(
        &config,
        &RunOptions {
            out_dir: tmp.path().to_path_buf(),
            force: true,
        },
    )
    .unwrap();
    assert!(matches!(forced.status, ExitStatus::Pass | ExitStatus::CertificateFail | ExitStatus::Diverged));
    assert!(forced.summary.forced && !forced.summary.certified);
    assert!(!forced.summary.parameters.unwrap().certificate.passed());
}

#[test]
fn lasso_dual_runs_with_gap_monitor_only() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(
        "[problem]\nfamily = \"lasso-dual\"\nlambda = 0.5\n[solver]\nvariant = \"thm1\"\nmax_iters = 200\n[analysis]\ngap_checkpoints = [50, 200]\n",
        Format::Toml,
    )
    .unwrap();
    let outcome = run_experiment(&config, &opts(tmp.path())).unwrap();
    assert_eq!(outcome.summary.monitors.len(), 1);
    assert_eq!(outcome.status, ExitStatus::Pass, "{:?}", outcome.summary.monitors);
    assert!(outcome.summary.final_residuals.unwrap().dist.is_none());
}

#[test]
fn sweep_over_delay_shrinks_certified_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(RANDOM_T, Format::Toml).unwrap();
    let report = sweep(&config, "T", &[0.0, 2.0, 4.0], &opts(tmp.path()), 3).unwrap();
    assert_eq!(report.status, ExitStatus::Pass);
    let sigmas: Vec<f64> = report.rows.iter().map(|r| r.sigma.unwrap()).collect();
    assert!(sigmas[0] > sigmas[1] && sigmas[1] > sigmas[2], "{sigmas:?}");
    let csv = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(tmp.path().join("T=4").join("trace.csv").exists());
}

#[test]
fn single_value_sweep_matches_a_plain_run() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(RANDOM_T, Format::Toml).unwrap();
    sweep(&config, "seed", &[2.0], &opts(tmp.path()), 1).unwrap();
    let mut plain = config.clone();
    plain.set_seed(2);
    run_experiment(&plain, &opts(&tmp.path().join("plain"))).unwrap();
    for f in ["trace.csv", "summary.json", "plotdata.csv"] {
        let a = std::fs::read(tmp.path().join("seed=2").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("plain").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn theta_sweep_satisfies_the_rate_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = quadratic_quadratic(&QuadraticParams {
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let consts = ProblemConstants::of(&inst.problem);
    let auto = auto_stepsize(&consts, 4, Theorem::Thm2, 1.0).unwrap();
    let (lo, hi) = theta_range(auto.steps.sigma, auto.steps.tau, consts.strong_convexity, consts.gamma).unwrap();
    let text = format!(
        "[problem]\nfamily = \"quadratic-quadratic\"\nseed = 2\n[solver]\nvariant = \"thm2\"\nsigma = {:?}\ntau = {:?}\nmax_iters = 2000\n[analysis]\ngap_checkpoints = [10]\n",
        auto.steps.sigma, auto.steps.tau
    );
    let config = parse_config(&text, Format::Toml).unwrap();
    let report = sweep(&config, "theta", &[lo, 0.5 * (lo + hi), hi], &opts(tmp.path()), 2).unwrap();
    for row in &report.rows {
        assert_eq!(row.status, ExitStatus::Pass, "{row:?}");
        assert!(row.empirical_rate.unwrap().is_finite());
    }
}

#[test]
fn sweep_records_failures_and_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(RANDOM_T, Format::Toml).unwrap();
    let report = sweep(&config, "N", &[0.0, 3.0, 2.5], &opts(tmp.path()), 2).unwrap();
    let statuses: Vec<ExitStatus> = report.rows.iter().map(|r| r.status).collect();
    assert_eq!(statuses, vec![ExitStatus::InvalidInput, ExitStatus::Pass, ExitStatus::InvalidInput]);
    assert!(report.rows[0].error.as_ref().unwrap().contains("n must be positive"));
    assert_eq!(report.status, ExitStatus::InvalidInput);
    assert!(sweep(&config, "colour", &[1.0], &opts(tmp.path()), 1).is_err());
}

#[test]
fn certify_prints_every_condition() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("c.toml"),
        "[problem]\nfamily = \"quadratic-quadratic\"\nd1 = 1\nd2 = 1\nn = 1\nconditioning = 1.0\ncoupling = \"identity\"\n[solver]\nvariant = \"thm1\"\nsigma = 0.4\ntau = 0.4\n[analysis]\ngap_checkpoints = [10]\n",
    )
    .unwrap();
    let out = cli(&["certify", "c.toml"], tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("step_condition")).unwrap();
    assert!(line.contains("0.200000") && line.ends_with("pass"), "{line}");
    assert!(text.contains("coupling_contraction"));

    // ||K||^2 tau = 2 > delta = 1 violates the coupling condition of the
    // Arrow-Hurwicz result.
    std::fs::write(
        tmp.path().join("t3.toml"),
        "[problem]\nfamily = \"quadratic-quadratic\"\nd1 = 1\nd2 = 1\nn = 1\nconditioning = 1.0\ncoupling = \"identity\"\n[solver]\nvariant = \"thm3\"\nsigma = 0.1\ntau = 2.0\n[analysis]\ngap_checkpoints = [10]\n",
    )
    .unwrap();
    let out = cli(&["certify", "t3.toml"], tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("coupling_condition")).unwrap();
    assert!(line.ends_with("FAIL"), "{line}");
}

#[test]
fn gap_subcommand_evaluates_a_point() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), RANDOM_T).unwrap();
    let config = parse_config(RANDOM_T, Format::Toml).unwrap();
    let inst = quadratic_quadratic(&config.problem.quadratic_params()).unwrap();
    let sad = inst.saddle.unwrap();
    let at = IterateFile {
        x: sad.x_hat.iter().copied().collect(),
        y: sad.y_hat.iter().copied().collect(),
    };
    std::fs::write(tmp.path().join("at.json"), serde_json::to_string(&at).unwrap()).unwrap();
    let out = cli(&["gap", "c.toml", "--at", "at.json"], tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let eval: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(eval["value"].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(eval["value"].as_f64(), Some(evaluate_gap(&config, &at).unwrap().value));

    std::fs::write(tmp.path().join("short.json"), r#"{"x": [1.0], "y": [0.0]}"#).unwrap();
    let out = cli(&["gap", "c.toml", "--at", "short.json"], tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn environment_mirrors_flags() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), RANDOM_T).unwrap();
    let out = cli(&["run", "c.toml"], tmp.path(), &[("PDPIAG_OUT_DIR", "envdir"), ("PDPIAG_SEED", "5")]);
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("envdir/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["problem"]["seed"], 5);
    assert_eq!(summary["config"]["solver"]["schedule"]["seed"], 5);

    let out = cli(&["run", "c.toml", "--out-dir", "flagdir"], tmp.path(), &[("PDPIAG_OUT_DIR", "envdir2")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("flagdir/trace.csv").exists());
    assert!(!tmp.path().join("envdir2").exists());
}

#[test]
fn help_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cli(&["--help"], tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("sweep"));
}
