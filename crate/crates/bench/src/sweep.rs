//! One-dimensional parameter sweeps over independent experiments.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::config::{AutoOr, ConfigError, ExperimentConfig, ScheduleConfig};
use crate::experiment::{run_experiment, write_atomic, BenchError, BenchResult, ExitStatus, RunOptions};

/// Numeric config fields a sweep may vary.
pub const AXES: [&str; 16] = [
    "T", "sigma", "tau", "theta", "N", "d1", "d2", "seed", "max_iters", "gamma", "lambda", "conditioning",
    "k_scale", "ratio", "p", "x0",
];

fn axis_error(axis: &str, message: String) -> ConfigError {
    ConfigError {
        key: Some(axis.to_string()),
        line: None,
        message,
    }
}

fn as_count(axis: &str, value: f64) -> Result<usize, ConfigError> {
    if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(axis_error(axis, format!("{axis} takes nonnegative integers, got {value}")))
    }
}

/// Sets `axis` to `value` in `config`.
///
/// Setting one step size while the other is `"auto"` fixes the other through
/// `ratio = tau / sigma`.
pub fn apply_axis(config: &mut ExperimentConfig, axis: &str, value: f64) -> Result<(), ConfigError> {
    let s = &mut config.solver;
    let p = &mut config.problem;
    match axis {
        "T" | "max_delay" => match &mut s.schedule {
            ScheduleConfig::RandomBounded { max_delay, .. } | ScheduleConfig::Constant { max_delay } => {
                *max_delay = as_count(axis, value)?
            }
            ScheduleConfig::Cyclic => {
                return Err(axis_error(axis, "the cyclic schedule fixes T = N - 1; sweep N instead".into()))
            }
        },
        "sigma" => {
            s.sigma = AutoOr::Value(value);
            if s.tau.value().is_none() {
                s.tau = AutoOr::Value(s.ratio * value);
            }
        }
        "tau" => {
            s.tau = AutoOr::Value(value);
            if s.sigma.value().is_none() {
                s.sigma = AutoOr::Value(value / s.ratio);
            }
        }
        "theta" => s.theta = Some(AutoOr::Value(value)),
        "N" | "n" => p.n = as_count(axis, value)?,
        "d1" => p.d1 = as_count(axis, value)?,
        "d2" => p.d2 = as_count(axis, value)?,
        "seed" => {
            let seed = as_count(axis, value)? as u64;
            config.set_seed(seed);
        }
        "max_iters" => s.max_iters = as_count(axis, value)?,
        "gamma" => p.gamma = Some(value),
        "lambda" => p.lambda = Some(value),
        "conditioning" => p.conditioning = Some(value),
        "k_scale" => p.k_scale = Some(value),
        "ratio" => s.ratio = value,
        "p" => match &mut s.schedule {
            ScheduleConfig::RandomBounded { p, .. } => *p = value,
            _ => return Err(axis_error(axis, "p applies to the random_bounded schedule only".into())),
        },
        "x0" => s.x0 = value,
        _ => {
            return Err(axis_error(
                axis,
                format!("unknown sweep axis; expected one of {}", AXES.join(", ")),
            ))
        }
    }
    Ok(())
}

/// One row of the sweep report.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub status: ExitStatus,
    pub certified: Option<bool>,
    pub sigma: Option<f64>,
    pub tau: Option<f64>,
    pub theta: Option<f64>,
    pub min_slack: Option<f64>,
    pub iterations: Option<usize>,
    pub final_dist: Option<f64>,
    pub final_lyapunov: Option<f64>,
    pub empirical_rate: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub axis: String,
    pub rows: Vec<SweepRow>,
    /// Highest status among the runs.
    pub status: ExitStatus,
    pub report_path: PathBuf,
}

/// Directory name of the run for one axis value.
pub fn run_dir_name(axis: &str, value: f64) -> String {
    format!("{axis}={value}")
}

fn run_one(base: &ExperimentConfig, axis: &str, value: f64, opts: &RunOptions) -> SweepRow {
    let mut row = SweepRow {
        value,
        status: ExitStatus::InvalidInput,
        certified: None,
        sigma: None,
        tau: None,
        theta: None,
        min_slack: None,
        iterations: None,
        final_dist: None,
        final_lyapunov: None,
        empirical_rate: None,
        error: None,
    };
    let mut config = base.clone();
    let result: BenchResult<_> = apply_axis(&mut config, axis, value)
        .map_err(BenchError::from)
        .and_then(|_| {
            let run_opts = RunOptions {
                out_dir: opts.out_dir.join(run_dir_name(axis, value)),
                force: opts.force,
            };
            run_experiment(&config, &run_opts)
        });
    match result {
        Ok(outcome) => {
            let s = &outcome.summary;
            row.status = outcome.status;
            if let Some(p) = &s.parameters {
                row.certified = Some(s.certified);
                row.sigma = Some(p.steps.sigma);
                row.tau = Some(p.steps.tau);
                row.theta = p.theta;
                row.min_slack = Some(p.certificate.min_slack());
            }
            if s.termination.is_some() {
                row.iterations = Some(s.iterations);
            }
            if let Some(f) = &s.final_residuals {
                row.final_dist = f.dist;
                row.final_lyapunov = f.lyapunov;
            }
            row.empirical_rate = s.empirical_rate;
            row.error = s.diagnostic.clone();
        }
        Err(e) => {
            row.status = e.status();
            row.error = Some(e.to_string());
        }
    }
    row
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// CSV report of a sweep.
pub fn report_csv(axis: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "axis,value,status,certified,sigma,tau,theta,min_slack,iterations,final_dist,final_lyapunov,empirical_rate,error\n",
    );
    for r in rows {
        let error = r.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
        let _ = writeln!(
            out,
            "{axis},{},{},{},{},{},{},{},{},{},{},{},\"{error}\"",
            r.value,
            r.status.code(),
            cell(r.certified),
            num(r.sigma),
            num(r.tau),
            num(r.theta),
            num(r.min_slack),
            cell(r.iterations),
            num(r.final_dist),
            num(r.final_lyapunov),
            num(r.empirical_rate),
        );
    }
    out
}

/// Runs one experiment per value, at most `workers` at a time, and writes
/// `sweep.csv` to the output directory. Per-run failures become rows.
pub fn sweep(
    base: &ExperimentConfig,
    axis: &str,
    values: &[f64],
    opts: &RunOptions,
    workers: usize,
) -> BenchResult<SweepReport> {
    if values.is_empty() {
        return Err(BenchError::Invalid("sweep needs at least one value".into()));
    }
    if !AXES.contains(&axis) && !matches!(axis, "max_delay" | "n") {
        return Err(axis_error(axis, format!("unknown sweep axis; expected one of {}", AXES.join(", "))).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| BenchError::Invalid(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| values.par_iter().map(|&v| run_one(base, axis, v, opts)).collect());
    let report_path = opts.out_dir.join("sweep.csv");
    write_atomic(&report_path, report_csv(axis, &rows).as_bytes())?;
    let status = rows.iter().map(|r| r.status).max().unwrap_or(ExitStatus::Pass);
    Ok(SweepReport {
        axis: axis.to_string(),
        rows,
        status,
        report_path,
    })
}
