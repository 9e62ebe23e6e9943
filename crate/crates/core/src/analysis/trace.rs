//! Per-iteration convergence records and their CSV form.

use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::solver::{DelaySchedule, ExtrapolationRule};

/// Column order of the trace CSV.
pub const TRACE_COLUMNS: [&str; 8] = ["k", "dist_x", "dist_y", "V_k", "gap", "gap_bound", "thm_bound", "wall_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub sigma: f64,
    pub tau: f64,
    pub rule: ExtrapolationRule,
    pub schedule: DelaySchedule,
    pub max_iters: usize,
    /// Effective delay bound `T` of the schedule.
    pub max_delay: usize,
    pub n: usize,
    pub d1: usize,
    pub d2: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    /// Aggregate `g_k` used by the step out of iterate `k`.
    pub aggregate: DVector<f64>,
    /// `tau_k^i` for each component.
    pub delays: Vec<usize>,
    pub dist_x: Option<f64>,
    pub dist_y: Option<f64>,
    /// `||x_k - x^||^2 / (2 sigma) + ||y_k - y^||^2 / (2 tau)`.
    pub lyapunov: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Diverged { k: usize },
    Stopped { k: usize, monitor: String, reason: String },
}

/// Checkpoint annotation: restricted gap at the averaged iterate and its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapAnnotation {
    pub gap: f64,
    pub bound: f64,
}

/// Append-only record of a run. Holds `completed iterations + 1` records.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    header: TraceHeader,
    records: Vec<TraceRecord>,
    termination: Termination,
    gaps: Vec<Option<GapAnnotation>>,
    thm_bounds: Vec<Option<f64>>,
}

impl ConvergenceTrace {
    pub fn new(header: TraceHeader, records: Vec<TraceRecord>, termination: Termination) -> Self {
        let n = records.len();
        Self {
            header,
            records,
            termination,
            gaps: vec![None; n],
            thm_bounds: vec![None; n],
        }
    }

    pub fn header(&self) -> &TraceHeader {
        &self.header
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn termination(&self) -> &Termination {
        &self.termination
    }

    pub fn completed_iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn last(&self) -> &TraceRecord {
        self.records.last().expect("a trace always holds the initial record")
    }

    /// Largest delay stored in any record.
    pub fn max_observed_delay(&self) -> usize {
        self.records.iter().flat_map(|r| r.delays.iter().copied()).max().unwrap_or(0)
    }

    pub fn set_gap(&mut self, k: usize, annotation: GapAnnotation) -> Result<()> {
        let slot = self.gaps.get_mut(k).ok_or_else(|| crate::Error::InvalidArgument(format!("no record {k}")))?;
        *slot = Some(annotation);
        Ok(())
    }

    pub fn gap(&self, k: usize) -> Option<GapAnnotation> {
        self.gaps.get(k).copied().flatten()
    }

    /// Attaches a per-iteration theoretical bound series (one value per record).
    pub fn set_thm_bounds(&mut self, bounds: Vec<Option<f64>>) -> Result<()> {
        if bounds.len() != self.records.len() {
            return invalid(format!("expected {} bound values, got {}", self.records.len(), bounds.len()));
        }
        self.thm_bounds = bounds;
        Ok(())
    }

    pub fn thm_bound(&self, k: usize) -> Option<f64> {
        self.thm_bounds.get(k).copied().flatten()
    }

    /// Writes the trace CSV: a header row then one row per record.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", TRACE_COLUMNS.join(","))?;
        let mut line = String::new();
        for (idx, r) in self.records.iter().enumerate() {
            line.clear();
            let gap = self.gaps[idx];
            let _ = write!(
                line,
                "{},{},{},{},{},{},{},{}",
                r.k,
                opt(r.dist_x),
                opt(r.dist_y),
                opt(r.lyapunov),
                opt(gap.map(|g| g.gap)),
                opt(gap.map(|g| g.bound)),
                opt(self.thm_bounds[idx]),
                opt(r.wall_ms)
            );
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> TraceHeader {
        TraceHeader {
            sigma: 0.1,
            tau: 0.2,
            rule: ExtrapolationRule::Pdhg,
            schedule: DelaySchedule::Cyclic,
            max_iters: 1,
            max_delay: 0,
            n: 1,
            d1: 1,
            d2: 1,
            seed: Some(3),
        }
    }

    fn rec(k: usize) -> TraceRecord {
        TraceRecord {
            k,
            x: DVector::from_element(1, k as f64),
            y: DVector::zeros(1),
            aggregate: DVector::zeros(1),
            delays: vec![0],
            dist_x: Some(0.5),
            dist_y: None,
            lyapunov: Some(1.25),
            wall_ms: None,
        }
    }

    #[test]
    fn csv_has_exact_columns_and_blank_fields() {
        let mut t = ConvergenceTrace::new(header(), vec![rec(0), rec(1)], Termination::Completed);
        t.set_gap(1, GapAnnotation { gap: 0.25, bound: 1.0 }).unwrap();
        let csv = t.to_csv_string();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "k,dist_x,dist_y,V_k,gap,gap_bound,thm_bound,wall_ms");
        assert_eq!(lines[1], "0,5e-1,,1.25e0,,,,");
        assert_eq!(lines[2], "1,5e-1,,1.25e0,2.5e-1,1e0,,");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn annotations_are_bounds_checked() {
        let mut t = ConvergenceTrace::new(header(), vec![rec(0)], Termination::Completed);
        assert!(t.set_gap(4, GapAnnotation { gap: 0.0, bound: 0.0 }).is_err());
        assert!(t.set_thm_bounds(vec![None, None]).is_err());
    }
}
