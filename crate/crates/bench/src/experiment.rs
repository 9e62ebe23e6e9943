//! Single experiment: build the problem, settle the step sizes, run, check,
//! and write the trace, summary, and plot data.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use pdpiag::analysis::{
    default_boxes, empirical_rate, monitor_boundedness, monitor_gap, monitor_linear_rate, partial_gap,
    saddle_residual, sup_primal_distance, BoxSet, ConvergenceTrace, GapAnnotation, GapEvaluation, GapOracle,
    GapSeries, MonitorReport, SaddleCertificate, Termination,
};
use pdpiag::certificates::{
    auto_stepsize, certify, compute_a_omega, compute_c, theta_range, ProblemConstants, StepSizeCertificate,
};
use pdpiag::problem::{lasso_dual, quadratic_quadratic, CatalogInstance, SaddleProblem};
use pdpiag::solver::{run, ExtrapolationRule, RunConfig, StepSizes};
use serde::{Deserialize, Serialize};

use crate::config::{AutoOr, BoxesConfig, ExperimentConfig, Family, MonitorKind, OracleChoice, Variant};

/// Process exit statuses. The set is exhaustive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    /// Certified (or forced) run whose enabled monitors all passed.
    Pass = 0,
    /// A step-size certificate or a monitored bound failed.
    CertificateFail = 1,
    /// No certified step sizes exist for the requested variant.
    Infeasible = 2,
    /// The iteration produced non-finite values.
    Diverged = 3,
    /// Invalid input: unparsable config, bad arguments, unreadable or
    /// unwritable files.
    InvalidInput = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Solver(#[from] pdpiag::Error),
    #[error("{0}")]
    Invalid(String),
}

impl BenchError {
    pub fn status(&self) -> ExitStatus {
        ExitStatus::InvalidInput
    }
}

pub type BenchResult<T> = std::result::Result<T, BenchError>;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> BenchResult<()> {
    let io = |context: String| move |source| BenchError::Io { context, source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io(format!("cannot create {}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io(format!("cannot write in {}", dir.display())))?;
    tmp.write_all(bytes).map_err(io(format!("cannot write {}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| BenchError::Io {
            context: format!("cannot rename into {}", path.display()),
            source: e.error,
        })?;
    Ok(())
}

/// Options supplied on the command line rather than in the config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub force: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("."),
            force: false,
        }
    }
}

/// The generated problem and everything derived from it before a run.
pub struct Prepared {
    pub instance: CatalogInstance,
    pub consts: ProblemConstants,
    pub max_delay: usize,
    pub x0: DVector<f64>,
    pub y0: DVector<f64>,
}

pub fn build_problem(config: &ExperimentConfig) -> BenchResult<CatalogInstance> {
    Ok(match config.problem.family {
        Family::QuadraticQuadratic => quadratic_quadratic(&config.problem.quadratic_params())?,
        Family::LassoDual => lasso_dual(&config.problem.lasso_params())?,
    })
}

pub fn prepare(config: &ExperimentConfig) -> BenchResult<Prepared> {
    let instance = build_problem(config)?;
    let problem = &instance.problem;
    let consts = ProblemConstants::of(problem);
    let max_delay = config.solver.schedule.schedule().max_delay(problem.num_components());
    Ok(Prepared {
        x0: DVector::from_element(problem.d1(), config.solver.x0),
        y0: DVector::from_element(problem.d2(), config.solver.y0),
        consts,
        max_delay,
        instance,
    })
}

/// Step sizes, extrapolation weight, and the certificate that covers them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub steps: StepSizes,
    pub theta: Option<f64>,
    pub certificate: StepSizeCertificate,
    /// Whether any value came from the automatic search.
    pub auto: bool,
}

/// Outcome of settling the parameters.
pub enum Settled {
    Ready(Parameters),
    Infeasible(String),
}

/// Resolves `"auto"` values and certifies the result.
pub fn settle_parameters(config: &ExperimentConfig, prep: &Prepared) -> BenchResult<Settled> {
    let s = &config.solver;
    let theorem = s.variant.theorem();
    let explicit_theta = match s.theta {
        Some(AutoOr::Value(t)) => Some(t),
        _ => None,
    };
    let (steps, auto) = match (s.sigma.value(), s.tau.value()) {
        (Some(sigma), Some(tau)) => (StepSizes::new(sigma, tau)?, false),
        _ => match auto_stepsize(&prep.consts, prep.max_delay, theorem, s.ratio) {
            Ok(a) => (a.steps, true),
            Err(pdpiag::Error::Infeasible(msg)) => return Ok(Settled::Infeasible(msg)),
            Err(e) => return Err(e.into()),
        },
    };
    let theta = if s.variant == Variant::Thm2 {
        match explicit_theta {
            Some(t) => Some(t),
            None => match theta_range(steps.sigma, steps.tau, prep.consts.strong_convexity, prep.consts.gamma) {
                Ok((lo, hi)) => Some(0.5 * (lo + hi)),
                Err(e) => return Ok(Settled::Infeasible(e.to_string())),
            },
        }
    } else {
        None
    };
    let certificate = certify(theorem, steps, theta, &prep.consts, prep.max_delay);
    Ok(Settled::Ready(Parameters {
        steps,
        theta,
        certificate,
        auto,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub k_norm: f64,
    pub smoothness: f64,
    pub strong_convexity: f64,
    pub gamma: f64,
    pub max_delay: usize,
    pub saddle_primal_residual: Option<f64>,
    pub saddle_dual_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    /// `C = (1 - tau sigma ||K||^2)^{-1}`.
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub omega: Option<f64>,
    pub theta_min: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalResiduals {
    pub k: usize,
    pub dist_x: Option<f64>,
    pub dist_y: Option<f64>,
    pub dist: Option<f64>,
    pub lyapunov: Option<f64>,
    /// Fixed-point residuals of the last iterate.
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorVerdict {
    pub name: MonitorKind,
    pub passed: bool,
    pub note: Option<String>,
    pub worst_violation: Option<f64>,
    pub violations: Option<usize>,
    pub gap: Option<GapSeries>,
}

impl MonitorVerdict {
    fn failed(name: MonitorKind, note: String) -> Self {
        Self {
            name,
            passed: false,
            note: Some(note),
            worst_violation: None,
            violations: None,
            gap: None,
        }
    }

    fn from_report(name: MonitorKind, r: &MonitorReport) -> Self {
        Self {
            name,
            passed: r.passed,
            note: None,
            worst_violation: Some(r.worst_violation),
            violations: Some(r.violations),
            gap: None,
        }
    }
}

/// Run summary written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: ExitStatus,
    pub exit_code: i32,
    pub diagnostic: Option<String>,
    pub config: ExperimentConfig,
    pub problem: Option<ProblemSummary>,
    pub parameters: Option<Parameters>,
    pub certified: bool,
    pub forced: bool,
    pub constants: Option<TheoremConstants>,
    pub termination: Option<Termination>,
    pub iterations: usize,
    pub max_observed_delay: Option<usize>,
    pub final_residuals: Option<FinalResiduals>,
    /// `sup_k ||x_k - x^||` over the run.
    pub sup_primal_distance: Option<f64>,
    /// Least-squares slope of `ln V_k`.
    pub empirical_rate: Option<f64>,
    pub monitors: Vec<MonitorVerdict>,
}

impl Summary {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            status: ExitStatus::Pass,
            exit_code: 0,
            diagnostic: None,
            config: config.clone(),
            problem: None,
            parameters: None,
            certified: false,
            forced: false,
            constants: None,
            termination: None,
            iterations: 0,
            max_observed_delay: None,
            final_residuals: None,
            sup_primal_distance: None,
            empirical_rate: None,
            monitors: Vec::new(),
        }
    }

    fn set_status(&mut self, status: ExitStatus) {
        self.status = status;
        self.exit_code = status.code();
    }
}

/// Result of [`run_experiment`].
#[derive(Debug)]
pub struct Outcome {
    pub status: ExitStatus,
    pub summary: Summary,
    pub trace: Option<ConvergenceTrace>,
    /// Files written, in write order.
    pub artifacts: Vec<PathBuf>,
}

pub fn resolve_boxes(config: &ExperimentConfig, prep: &Prepared) -> BenchResult<(BoxSet, BoxSet)> {
    Ok(match &config.analysis.boxes {
        BoxesConfig::Explicit(b) => (
            BoxSet::new(DVector::from_vec(b.x_lower.clone()), DVector::from_vec(b.x_upper.clone()))?,
            BoxSet::new(DVector::from_vec(b.y_lower.clone()), DVector::from_vec(b.y_upper.clone()))?,
        ),
        BoxesConfig::Auto(_) => match &prep.instance.saddle {
            Some(s) => default_boxes(&s.x_hat, &s.y_hat, &prep.x0, &prep.y0)?,
            None => default_boxes(&prep.x0, &prep.y0, &prep.x0, &prep.y0)?,
        },
    })
}

pub fn resolve_oracle(config: &ExperimentConfig, problem: &SaddleProblem) -> GapOracle {
    match config.analysis.gap_oracle {
        OracleChoice::Auto => GapOracle::for_problem(problem),
        OracleChoice::SeparableExact => GapOracle::SeparableExact,
        OracleChoice::ProjectedGradient => GapOracle::DEFAULT_PG,
    }
}

fn rule_theta(rule: ExtrapolationRule) -> Option<f64> {
    match rule {
        ExtrapolationRule::Pdhg => Some(1.0),
        ExtrapolationRule::Theta { theta } => Some(theta),
        ExtrapolationRule::ArrowHurwicz => None,
    }
}

fn fmt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Long-format plot data: `series,x,value,bound`.
fn plot_data(trace: &ConvergenceTrace, gap: Option<&GapSeries>) -> String {
    let mut out = String::from("series,x,value,bound\n");
    for (idx, r) in trace.records().iter().enumerate() {
        let dist = r.dist_x.zip(r.dist_y).map(|(a, b)| a.hypot(b));
        let _ = writeln!(out, "dist,{},{},", r.k, fmt_num(dist));
        let _ = writeln!(out, "lyapunov,{},{},{}", r.k, fmt_num(r.lyapunov), fmt_num(trace.thm_bound(idx)));
    }
    if let Some(g) = gap {
        for p in &g.points {
            let _ = writeln!(out, "gap,{},{},{}", p.m, fmt_num(Some(p.gap)), fmt_num(Some(p.bound)));
        }
    }
    out
}

fn artifact_path(opts: &RunOptions, rel: &str) -> PathBuf {
    opts.out_dir.join(rel)
}

fn write_summary(summary: &Summary, opts: &RunOptions, artifacts: &mut Vec<PathBuf>) -> BenchResult<()> {
    let path = artifact_path(opts, &summary.config.output.summary_path);
    let mut json = serde_json::to_string_pretty(summary).map_err(|e| BenchError::Invalid(e.to_string()))?;
    json.push('\n');
    write_atomic(&path, json.as_bytes())?;
    artifacts.push(path);
    Ok(())
}

fn evaluate_monitors(
    config: &ExperimentConfig,
    prep: &Prepared,
    params: &Parameters,
    rule: ExtrapolationRule,
    trace: &mut ConvergenceTrace,
    saddle: Option<&SaddleCertificate>,
    summary: &mut Summary,
) -> BenchResult<Option<GapSeries>> {
    let problem = &prep.instance.problem;
    let steps = params.steps;
    let k_norm = prep.consts.k_norm;
    let mut gap_series = None;

    let c = compute_c(steps.sigma, steps.tau, k_norm).ok();
    let rate = rule_theta(rule).and_then(|theta| {
        compute_a_omega(theta, steps.sigma, steps.tau, prep.consts.strong_convexity, prep.consts.gamma, k_norm).ok()
    });
    summary.constants = Some(TheoremConstants {
        c,
        a: rate.map(|r| r.a),
        omega: rate.map(|r| r.omega),
        theta_min: rate.map(|r| r.theta_min),
    });

    if let Some(s) = saddle {
        let v0 = trace.records()[0].lyapunov.unwrap_or(f64::NAN);
        let bounds: Vec<Option<f64>> = match config.solver.variant {
            Variant::Thm1 => trace.records().iter().map(|_| c.map(|c| c * v0)).collect(),
            Variant::Thm2 => trace
                .records()
                .iter()
                .map(|r| rate.map(|rc| rc.omega.powi(r.k as i32) * v0))
                .collect(),
            Variant::Thm3 => vec![None; trace.records().len()],
        };
        trace.set_thm_bounds(bounds)?;
        summary.sup_primal_distance = Some(sup_primal_distance(trace, &s.x_hat));
        summary.empirical_rate = empirical_rate(trace, 1e-24)?;
    }

    for kind in config.monitors() {
        let verdict = match (kind, saddle) {
            (MonitorKind::Gap, _) => {
                let (b1, b2) = resolve_boxes(config, prep)?;
                let oracle = resolve_oracle(config, problem);
                let series = monitor_gap(
                    trace,
                    problem,
                    &b1,
                    &b2,
                    oracle,
                    &prep.x0,
                    &prep.y0,
                    steps,
                    &config.analysis.gap_checkpoints,
                )?;
                for p in &series.points {
                    trace.set_gap(p.m, GapAnnotation { gap: p.gap, bound: p.bound })?;
                }
                let worst = series
                    .points
                    .iter()
                    .map(|p| p.gap - p.bound)
                    .fold(f64::NEG_INFINITY, f64::max);
                let v = MonitorVerdict {
                    name: kind,
                    passed: series.passed,
                    note: series.inexact.then(|| "gap oracle missed its tolerance".to_string()),
                    worst_violation: Some(worst.max(0.0)),
                    violations: Some(series.points.iter().filter(|p| !p.passed).count()),
                    gap: Some(series.clone()),
                };
                gap_series = Some(series);
                v
            }
            (_, None) => MonitorVerdict::failed(kind, "needs a reference saddle point".into()),
            (MonitorKind::Boundedness, Some(s)) => match c {
                Some(c) => MonitorVerdict::from_report(
                    kind,
                    &monitor_boundedness(trace, c, &s.x_hat, &s.y_hat, steps),
                ),
                None => MonitorVerdict::failed(kind, "tau sigma ||K||^2 >= 1: C is undefined".into()),
            },
            (MonitorKind::LinearRate, Some(s)) => match rate {
                Some(rc) => MonitorVerdict::from_report(
                    kind,
                    &monitor_linear_rate(trace, rc.omega, &s.x_hat, &s.y_hat, steps, k_norm),
                ),
                None => MonitorVerdict::failed(kind, "rate constants undefined for these parameters".into()),
            },
            (MonitorKind::Convergence, Some(s)) => {
                let last = trace.last();
                let dist = ((&last.x - &s.x_hat).norm_squared() + (&last.y - &s.y_hat).norm_squared()).sqrt();
                let tol = config.analysis.convergence_tol;
                MonitorVerdict {
                    name: kind,
                    passed: dist <= tol,
                    note: None,
                    worst_violation: Some((dist - tol).max(0.0)),
                    violations: Some(usize::from(dist > tol)),
                    gap: None,
                }
            }
        };
        summary.monitors.push(verdict);
    }
    Ok(gap_series)
}

/// Runs one experiment and writes its artifacts below `opts.out_dir`.
///
/// Certificate failures, infeasibility, and divergence are reported through
/// the returned status; errors are reserved for invalid input and I/O.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> BenchResult<Outcome> {
    config
        .validate()
        .map_err(|(key, message)| BenchError::Config(crate::config::ConfigError {
            key: Some(key),
            line: None,
            message,
        }))?;
    let mut summary = Summary::new(config);
    let mut artifacts = Vec::new();
    let prep = prepare(config)?;
    let problem = &prep.instance.problem;
    summary.problem = Some(ProblemSummary {
        d1: problem.d1(),
        d2: problem.d2(),
        n: problem.num_components(),
        k_norm: prep.consts.k_norm,
        smoothness: prep.consts.smoothness,
        strong_convexity: prep.consts.strong_convexity,
        gamma: prep.consts.gamma,
        max_delay: prep.max_delay,
        saddle_primal_residual: prep.instance.saddle.as_ref().map(|s| s.primal_residual),
        saddle_dual_residual: prep.instance.saddle.as_ref().map(|s| s.dual_residual),
    });
    let finish = |mut summary: Summary, status: ExitStatus, mut artifacts: Vec<PathBuf>, trace| {
        summary.set_status(status);
        write_summary(&summary, opts, &mut artifacts)?;
        Ok(Outcome {
            status,
            summary,
            trace,
            artifacts,
        })
    };

    let params = match settle_parameters(config, &prep)? {
        Settled::Ready(p) => p,
        Settled::Infeasible(msg) => {
            summary.diagnostic = Some(format!("infeasible: {msg}"));
            return finish(summary, ExitStatus::Infeasible, artifacts, None);
        }
    };
    summary.certified = params.certificate.passed();
    summary.forced = !summary.certified && (opts.force || config.solver.force);
    summary.parameters = Some(params.clone());
    if !summary.certified && !summary.forced {
        let names: Vec<&str> = params.certificate.failed().map(|c| c.name.as_str()).collect();
        summary.diagnostic = Some(format!("certificate failed: {}", names.join(", ")));
        return finish(summary, ExitStatus::CertificateFail, artifacts, None);
    }

    let rule = config.solver.variant.rule(params.theta);
    let mut run_config = RunConfig::new(
        params.steps,
        rule,
        config.solver.schedule.schedule(),
        config.solver.max_iters,
    );
    run_config.seed = Some(config.problem.seed);
    if let Some(s) = &prep.instance.saddle {
        run_config = run_config.with_reference(s.x_hat.clone(), s.y_hat.clone());
    }
    let mut trace = run(problem, &prep.x0, &prep.y0, &run_config, &mut [])?;
    summary.termination = Some(trace.termination().clone());
    summary.iterations = trace.completed_iterations();
    summary.max_observed_delay = Some(trace.max_observed_delay());

    let diverged = matches!(trace.termination(), Termination::Diverged { .. });
    let gap_series = if diverged {
        summary.diagnostic = Some(format!("diverged after {} iterations", trace.completed_iterations()));
        None
    } else {
        evaluate_monitors(
            config,
            &prep,
            &params,
            rule,
            &mut trace,
            prep.instance.saddle.as_ref(),
            &mut summary,
        )?
    };

    let last = trace.last();
    let (primal_residual, dual_residual) = saddle_residual(problem, &last.x, &last.y, params.steps.tau)?;
    summary.final_residuals = Some(FinalResiduals {
        k: last.k,
        dist_x: last.dist_x,
        dist_y: last.dist_y,
        dist: last.dist_x.zip(last.dist_y).map(|(a, b)| a.hypot(b)),
        lyapunov: last.lyapunov,
        primal_residual,
        dual_residual,
    });

    let trace_path = artifact_path(opts, &config.output.trace_path);
    write_atomic(&trace_path, trace.to_csv_string().as_bytes())?;
    artifacts.push(trace_path);
    let plot_path = artifact_path(opts, &config.output.plotdata_path);
    write_atomic(&plot_path, plot_data(&trace, gap_series.as_ref()).as_bytes())?;
    artifacts.push(plot_path);

    let status = if diverged {
        ExitStatus::Diverged
    } else if summary.monitors.iter().all(|m| m.passed) {
        ExitStatus::Pass
    } else {
        let failed: Vec<String> = summary
            .monitors
            .iter()
            .filter(|m| !m.passed)
            .map(|m| format!("{:?}", m.name).to_lowercase())
            .collect();
        summary.diagnostic = Some(format!("monitor failed: {}", failed.join(", ")));
        ExitStatus::CertificateFail
    };
    finish(summary, status, artifacts, Some(trace))
}

/// Certificate report without a solver run.
pub struct CertifyReport {
    pub status: ExitStatus,
    pub parameters: Option<Parameters>,
    pub diagnostic: Option<String>,
}

pub fn certify_config(config: &ExperimentConfig) -> BenchResult<CertifyReport> {
    let prep = prepare(config)?;
    Ok(match settle_parameters(config, &prep)? {
        Settled::Infeasible(msg) => CertifyReport {
            status: ExitStatus::Infeasible,
            parameters: None,
            diagnostic: Some(format!("infeasible: {msg}")),
        },
        Settled::Ready(p) => CertifyReport {
            status: if p.certificate.passed() {
                ExitStatus::Pass
            } else {
                ExitStatus::CertificateFail
            },
            parameters: Some(p),
            diagnostic: None,
        },
    })
}

/// Human-readable certificate table.
pub fn format_certificate(p: &Parameters) -> String {
    let c = &p.certificate;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "theorem {:?}: sigma = {}, tau = {}, theta = {}, T = {}, ||K|| = {}, L = {}",
        c.theorem,
        p.steps.sigma,
        p.steps.tau,
        p.theta.map(|t| t.to_string()).unwrap_or_else(|| "-".into()),
        c.max_delay,
        c.k_norm,
        c.smoothness
    );
    let _ = writeln!(
        out,
        "{:<26} {:>14} {:>14} {:>14}  verdict",
        "condition", "lhs", "rhs", "slack"
    );
    for check in &c.checks {
        let _ = writeln!(
            out,
            "{:<26} {:>14.6} {:>14.6} {:>14.6}  {}",
            check.name,
            check.lhs,
            check.rhs,
            check.slack,
            if check.satisfied { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(out, "overall: {}", if c.passed() { "pass" } else { "FAIL" });
    out
}

/// Iterate file accepted by the `gap` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateFile {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Restricted gap of a given point under the config's boxes and oracle.
pub fn evaluate_gap(config: &ExperimentConfig, at: &IterateFile) -> BenchResult<GapEvaluation> {
    let prep = prepare(config)?;
    let problem = &prep.instance.problem;
    if at.x.len() != problem.d1() || at.y.len() != problem.d2() {
        return Err(BenchError::Invalid(format!(
            "iterate has dimensions ({}, {}), problem has ({}, {})",
            at.x.len(),
            at.y.len(),
            problem.d1(),
            problem.d2()
        )));
    }
    let (b1, b2) = resolve_boxes(config, &prep)?;
    Ok(partial_gap(
        problem,
        &b1,
        &b2,
        &DVector::from_vec(at.x.clone()),
        &DVector::from_vec(at.y.clone()),
        resolve_oracle(config, problem),
    )?)
}
