//! Experiment configuration: schema, parsing, and validation.
//!
//! The canonical format is TOML; JSON with the same structure is accepted as
//! an alternative. Unknown keys are rejected everywhere.
//!
//! ```toml
//! [problem]
//! family = "quadratic-quadratic"    # or "lasso-dual"
//! d1 = 10
//! d2 = 10
//! n = 5
//! seed = 0
//!
//! [solver]
//! variant = "thm1"                  # thm1 | thm2 | thm3
//! sigma = "auto"
//! tau = "auto"
//! max_iters = 10000
//! schedule = { kind = "random_bounded", max_delay = 4, p = 0.3, seed = 1 }
//!
//! [analysis]
//! gap_checkpoints = [10, 100, 1000]
//! monitors = ["boundedness", "gap"]
//!
//! [output]
//! trace_path = "trace.csv"
//! ```

use std::fmt;
use std::path::Path;

use pdpiag::certificates::Theorem;
use pdpiag::problem::{Coupling, LassoDualParams, QuadraticParams};
use pdpiag::solver::{DelaySchedule, ExtrapolationRule};
use serde::{Deserialize, Serialize};

/// Input encoding of a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    /// JSON for a `.json` extension, TOML otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Toml,
        }
    }
}

/// A config error, located by key and (when known) line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(key) = &self.key {
            write!(f, "{key}: ")?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "quadratic-quadratic")]
    QuadraticQuadratic,
    #[serde(rename = "lasso-dual")]
    LassoDual,
}

impl Family {
    /// Whether instances come with an analytic saddle point.
    pub fn has_saddle(self) -> bool {
        self == Self::QuadraticQuadratic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Auto {
    #[serde(rename = "auto")]
    Auto,
}

/// A scalar that may be left to the certificate machinery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Auto(Auto),
    Value(f64),
}

impl AutoOr {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Auto(_) => None,
            Self::Value(v) => Some(v),
        }
    }
}

impl Default for AutoOr {
    fn default() -> Self {
        Self::Auto(Auto::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub family: Family,
    #[serde(default = "d_dim")]
    pub d1: usize,
    #[serde(default = "d_dim")]
    pub d2: usize,
    #[serde(default = "d_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagonal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows_per_component: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_scale: Option<f64>,
}

fn d_dim() -> usize {
    10
}

fn d_n() -> usize {
    5
}

impl ProblemConfig {
    pub fn quadratic_params(&self) -> QuadraticParams {
        let d = QuadraticParams::default();
        QuadraticParams {
            d1: self.d1,
            d2: self.d2,
            n: self.n,
            seed: self.seed,
            gamma: self.gamma.unwrap_or(d.gamma),
            conditioning: self.conditioning.unwrap_or(d.conditioning),
            coupling: self.coupling.unwrap_or(d.coupling),
            k_scale: self.k_scale.unwrap_or(d.k_scale),
            diagonal: self.diagonal.unwrap_or(d.diagonal),
        }
    }

    pub fn lasso_params(&self) -> LassoDualParams {
        let d = LassoDualParams::default();
        LassoDualParams {
            d1: self.d1,
            d2: self.d2,
            n: self.n,
            seed: self.seed,
            lambda: self.lambda.unwrap_or(d.lambda),
            rows_per_component: self.rows_per_component.unwrap_or(d.rows_per_component),
            coupling: self.coupling.unwrap_or(d.coupling),
            k_scale: self.k_scale.unwrap_or(d.k_scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Thm1,
    Thm2,
    Thm3,
}

impl Variant {
    pub fn theorem(self) -> Theorem {
        match self {
            Self::Thm1 => Theorem::Thm1,
            Self::Thm2 => Theorem::Thm2,
            Self::Thm3 => Theorem::Thm3,
        }
    }

    pub fn rule(self, theta: Option<f64>) -> ExtrapolationRule {
        self.theorem().rule(theta)
    }

    pub fn default_monitors(self) -> Vec<MonitorKind> {
        match self {
            Self::Thm1 => vec![MonitorKind::Boundedness, MonitorKind::Gap],
            Self::Thm2 => vec![MonitorKind::LinearRate],
            Self::Thm3 => vec![MonitorKind::Convergence],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Cyclic,
    RandomBounded {
        max_delay: usize,
        #[serde(default = "d_p")]
        p: f64,
        #[serde(default)]
        seed: u64,
    },
    Constant {
        max_delay: usize,
    },
}

fn d_p() -> f64 {
    0.5
}

impl ScheduleConfig {
    pub fn schedule(&self) -> DelaySchedule {
        match *self {
            Self::Cyclic => DelaySchedule::Cyclic,
            Self::RandomBounded { max_delay, p, seed } => DelaySchedule::RandomBounded { max_delay, p, seed },
            Self::Constant { max_delay } => DelaySchedule::Constant { max_delay },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub variant: Variant,
    #[serde(default)]
    pub sigma: AutoOr,
    #[serde(default)]
    pub tau: AutoOr,
    /// Extrapolation weight for `thm2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<AutoOr>,
    /// `tau / sigma` used by the automatic step-size search.
    #[serde(default = "d_ratio")]
    pub ratio: f64,
    #[serde(default = "d_iters")]
    pub max_iters: usize,
    /// Run even when explicit step sizes fail certification.
    #[serde(default)]
    pub force: bool,
    /// Fill value of the initial primal point.
    #[serde(default = "d_x0")]
    pub x0: f64,
    /// Fill value of the initial dual point.
    #[serde(default)]
    pub y0: f64,
    #[serde(default = "d_schedule")]
    pub schedule: ScheduleConfig,
}

fn d_ratio() -> f64 {
    1.0
}

fn d_iters() -> usize {
    1000
}

fn d_x0() -> f64 {
    1.0
}

fn d_schedule() -> ScheduleConfig {
    ScheduleConfig::Cyclic
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    /// `V_k <= C V_0` at every iterate.
    Boundedness,
    /// Restricted gap of the averaged iterates against its `O(1/M)` bound.
    Gap,
    /// The `omega^k` contraction bound.
    LinearRate,
    /// Final distance to the saddle point below `convergence_tol`.
    Convergence,
}

impl MonitorKind {
    pub fn needs_saddle(self) -> bool {
        self != Self::Gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleChoice {
    Auto,
    SeparableExact,
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitBoxes {
    pub x_lower: Vec<f64>,
    pub x_upper: Vec<f64>,
    pub y_lower: Vec<f64>,
    pub y_upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxesConfig {
    Auto(Auto),
    Explicit(ExplicitBoxes),
}

impl Default for BoxesConfig {
    fn default() -> Self {
        Self::Auto(Auto::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "d_checkpoints")]
    pub gap_checkpoints: Vec<usize>,
    #[serde(default)]
    pub boxes: BoxesConfig,
    /// Defaults to the monitors matching the solver variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitors: Option<Vec<MonitorKind>>,
    #[serde(default = "d_oracle")]
    pub gap_oracle: OracleChoice,
    #[serde(default = "d_conv_tol")]
    pub convergence_tol: f64,
}

fn d_checkpoints() -> Vec<usize> {
    vec![10, 100, 1000]
}

fn d_oracle() -> OracleChoice {
    OracleChoice::Auto
}

fn d_conv_tol() -> f64 {
    1e-6
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            gap_checkpoints: d_checkpoints(),
            boxes: BoxesConfig::default(),
            monitors: None,
            gap_oracle: d_oracle(),
            convergence_tol: d_conv_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "d_trace")]
    pub trace_path: String,
    #[serde(default = "d_summary")]
    pub summary_path: String,
    #[serde(default = "d_plot")]
    pub plotdata_path: String,
}

fn d_trace() -> String {
    "trace.csv".into()
}

fn d_summary() -> String {
    "summary.json".into()
}

fn d_plot() -> String {
    "plotdata.csv".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trace_path: d_trace(),
            summary_path: d_summary(),
            plotdata_path: d_plot(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Enabled monitors. Families without an analytic saddle point default to
    /// the gap monitor alone.
    pub fn monitors(&self) -> Vec<MonitorKind> {
        match &self.analysis.monitors {
            Some(m) => m.clone(),
            None => {
                let mut m = self.solver.variant.default_monitors();
                if !self.problem.family.has_saddle() {
                    m.retain(|k| !k.needs_saddle());
                }
                m
            }
        }
    }

    /// Overrides every seed: the problem's and the random schedule's.
    pub fn set_seed(&mut self, seed: u64) {
        self.problem.seed = seed;
        if let ScheduleConfig::RandomBounded { seed: s, .. } = &mut self.solver.schedule {
            *s = seed;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    /// Semantic checks beyond the schema. Errors name the offending key.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let err = |key: &str, msg: String| Err((key.to_string(), msg));
        let p = &self.problem;
        if p.d1 == 0 {
            return err("problem.d1", "d1 must be positive".into());
        }
        if p.d2 == 0 {
            return err("problem.d2", "d2 must be positive".into());
        }
        if p.n == 0 {
            return err("problem.n", "n must be positive".into());
        }
        let foreign: &[(&str, bool)] = match p.family {
            Family::QuadraticQuadratic => &[
                ("lambda", p.lambda.is_some()),
                ("rows_per_component", p.rows_per_component.is_some()),
            ],
            Family::LassoDual => &[
                ("gamma", p.gamma.is_some()),
                ("conditioning", p.conditioning.is_some()),
                ("diagonal", p.diagonal.is_some()),
            ],
        };
        for (name, present) in foreign {
            if *present {
                return err(
                    &format!("problem.{name}"),
                    format!("{name} is not a parameter of family {:?}", p.family),
                );
            }
        }
        if let Some(g) = p.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return err("problem.gamma", "gamma must be positive".into());
            }
        }
        if let Some(c) = p.conditioning {
            if !(c >= 1.0 && c.is_finite()) {
                return err("problem.conditioning", "conditioning must be at least 1".into());
            }
        }
        if let Some(l) = p.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return err("problem.lambda", "lambda must be nonnegative".into());
            }
        }
        if p.rows_per_component == Some(0) {
            return err("problem.rows_per_component", "rows_per_component must be positive".into());
        }
        if let Some(k) = p.k_scale {
            if !k.is_finite() {
                return err("problem.k_scale", "k_scale must be finite".into());
            }
        }
        if p.coupling == Some(Coupling::Identity) && p.d1 != p.d2 {
            return err("problem.coupling", "identity coupling requires d1 = d2".into());
        }

        let s = &self.solver;
        for (name, v) in [("sigma", s.sigma), ("tau", s.tau)] {
            if let Some(x) = v.value() {
                if !(x > 0.0 && x.is_finite()) {
                    return err(&format!("solver.{name}"), format!("{name} must be positive"));
                }
            }
        }
        if s.sigma.value().is_some() != s.tau.value().is_some() {
            return err("solver.tau", "sigma and tau must both be \"auto\" or both be numbers".into());
        }
        if !(s.ratio > 0.0 && s.ratio.is_finite()) {
            return err("solver.ratio", "ratio must be positive".into());
        }
        if s.max_iters == 0 {
            return err("solver.max_iters", "max_iters must be positive".into());
        }
        if !s.x0.is_finite() {
            return err("solver.x0", "x0 must be finite".into());
        }
        if !s.y0.is_finite() {
            return err("solver.y0", "y0 must be finite".into());
        }
        match (s.variant, s.theta) {
            (Variant::Thm2, Some(AutoOr::Value(t))) if !(t > 0.0 && t <= 1.0) => {
                return err("solver.theta", "theta must lie in (0, 1]".into());
            }
            (Variant::Thm1 | Variant::Thm3, Some(_)) => {
                return err("solver.theta", "theta only applies to variant thm2".into());
            }
            _ => {}
        }
        if let ScheduleConfig::RandomBounded { p, .. } = s.schedule {
            if !(0.0..=1.0).contains(&p) {
                return err("solver.schedule", "p must lie in [0, 1]".into());
            }
        }

        let a = &self.analysis;
        if let Some(&m) = a.gap_checkpoints.iter().find(|&&m| m == 0 || m > s.max_iters) {
            return err(
                "analysis.gap_checkpoints",
                format!("checkpoint {m} must lie in 1..={}", s.max_iters),
            );
        }
        if let Some(m) = a.monitors.iter().flatten().find(|m| m.needs_saddle() && !p.family.has_saddle()) {
            return err(
                "analysis.monitors",
                format!("monitor {m:?} needs a reference saddle point, which {:?} does not provide", p.family),
            );
        }
        if !(a.convergence_tol > 0.0) {
            return err("analysis.convergence_tol", "convergence_tol must be positive".into());
        }
        if a.gap_oracle == OracleChoice::SeparableExact
            && (p.family == Family::LassoDual || p.diagonal == Some(false))
        {
            return err(
                "analysis.gap_oracle",
                "separable_exact needs a diagonal quadratic-quadratic problem".into(),
            );
        }
        if let BoxesConfig::Explicit(b) = &a.boxes {
            for (name, v, d) in [
                ("x_lower", &b.x_lower, p.d1),
                ("x_upper", &b.x_upper, p.d1),
                ("y_lower", &b.y_lower, p.d2),
                ("y_upper", &b.y_upper, p.d2),
            ] {
                if v.len() != d {
                    return err(&format!("analysis.boxes.{name}"), format!("expected {d} entries, got {}", v.len()));
                }
            }
            let bad = b.x_lower.iter().zip(&b.x_upper).any(|(l, u)| !(l <= u))
                || b.y_lower.iter().zip(&b.y_upper).any(|(l, u)| !(l <= u));
            if bad {
                return err("analysis.boxes", "every lower bound must not exceed its upper bound".into());
            }
        }
        let o = &self.output;
        for (name, v) in [
            ("trace_path", &o.trace_path),
            ("summary_path", &o.summary_path),
            ("plotdata_path", &o.plotdata_path),
        ] {
            if v.is_empty() {
                return err(&format!("output.{name}"), format!("{name} must not be empty"));
            }
        }
        Ok(())
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line on which `key` (dotted path) is assigned, found by scanning section
/// headers for TOML and quoted keys for JSON.
fn locate_key(text: &str, key: &str, format: Format) -> Option<usize> {
    let (section, leaf) = match key.split_once('.') {
        Some((s, rest)) => (s, rest.split('.').next().unwrap_or(rest)),
        None => ("", key),
    };
    match format {
        Format::Toml => {
            let mut current = String::new();
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.starts_with('[') {
                    current = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
                    continue;
                }
                let Some((lhs, _)) = line.split_once('=') else { continue };
                let lhs = lhs.trim().trim_matches('"');
                let in_section = current == section || current.starts_with(&format!("{section}."));
                if (in_section && lhs == leaf) || lhs == format!("{section}.{leaf}") {
                    return Some(i + 1);
                }
            }
            None
        }
        Format::Json => {
            let start = text.find(&format!("\"{section}\""))?;
            let rel = text[start..].find(&format!("\"{leaf}\""))?;
            Some(line_of_offset(text, start + rel))
        }
    }
}

/// Line opening the section of `key`, for keys absent from the text.
fn locate_section(text: &str, key: &str, format: Format) -> Option<usize> {
    let section = key.split('.').next()?;
    let needle = match format {
        Format::Toml => format!("[{section}]"),
        Format::Json => format!("\"{section}\""),
    };
    text.lines().position(|l| l.trim_start().starts_with(&needle) || l.contains(&needle)).map(|i| i + 1)
}

/// Dotted key assigned on TOML line `line`, if that line is an assignment.
fn key_on_line(text: &str, line: usize) -> Option<String> {
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.starts_with('[') {
            section = l.trim_matches(|c| c == '[' || c == ']').trim().to_string();
        }
        if i + 1 == line {
            let (lhs, _) = l.split_once('=')?;
            let key = lhs.trim().trim_matches('"');
            return Some(if section.is_empty() { key.to_string() } else { format!("{section}.{key}") });
        }
    }
    None
}

/// Parses and validates a config.
pub fn parse_config(text: &str, format: Format) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = match format {
        Format::Toml => toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of_offset(text, s.start));
            ConfigError {
                key: line.and_then(|l| key_on_line(text, l)),
                line,
                message: e.message().to_string(),
            }
        })?,
        Format::Json => serde_json::from_str(text).map_err(|e| ConfigError {
            key: None,
            line: Some(e.line()),
            message: e.to_string(),
        })?,
    };
    config.validate().map_err(|(key, message)| ConfigError {
        line: locate_key(text, &key, format).or_else(|| locate_section(text, &key, format)),
        key: Some(key),
        message,
    })?;
    Ok(config)
}

/// Reads and parses a config file, choosing the format by extension.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        key: None,
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config(&text, Format::from_path(path))
}
