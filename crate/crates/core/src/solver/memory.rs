//! Gradient memory table `{e_i}` with staleness stamps.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::problem::SaddleProblem;

/// How the cached aggregate is maintained after a refresh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateUpdate {
    /// Re-sum all entries in ascending index order. Bit-identical to a replay
    /// of `sum_i grad f_i(x_{s_i})`.
    #[default]
    Resum,
    /// `g <- g + grad f_i(x_new) - e_i` per refreshed index.
    Incremental,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientMemory {
    entries: Vec<DVector<f64>>,
    stamps: Vec<usize>,
    aggregate: DVector<f64>,
    update: AggregateUpdate,
}

pub(crate) fn ordered_sum(vectors: &[DVector<f64>]) -> DVector<f64> {
    let mut acc = vectors[0].clone();
    for v in &vectors[1..] {
        acc += v;
    }
    acc
}

impl GradientMemory {
    /// `e_i = grad f_i(x0)`, all stamps 0.
    pub fn new(problem: &SaddleProblem, x0: &DVector<f64>) -> Result<Self> {
        let entries = (0..problem.num_components())
            .map(|i| problem.component_gradient(i, x0))
            .collect::<Result<Vec<_>>>()?;
        let aggregate = ordered_sum(&entries);
        Ok(Self {
            stamps: vec![0; entries.len()],
            entries,
            aggregate,
            update: AggregateUpdate::default(),
        })
    }

    pub fn with_update(mut self, update: AggregateUpdate) -> Self {
        self.update = update;
        self
    }

    pub fn entries(&self) -> &[DVector<f64>] {
        &self.entries
    }

    pub fn stamps(&self) -> &[usize] {
        &self.stamps
    }

    /// Cached `g = sum_i e_i`.
    pub fn aggregate(&self) -> &DVector<f64> {
        &self.aggregate
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Freshly recomputed `sum_i e_i`.
    pub fn recomputed_sum(&self) -> DVector<f64> {
        ordered_sum(&self.entries)
    }

    /// Delays `tau^i = k - s_i` seen by an update at iteration `k`.
    pub fn delays(&self, k: usize) -> Vec<usize> {
        self.stamps.iter().map(|&s| k.saturating_sub(s)).collect()
    }

    /// Replaces `e_i` by `grad f_i(x_new)` and stamps it `k_new` for every `i`
    /// in `indices`.
    pub fn refresh(
        &mut self,
        indices: &[usize],
        x_new: &DVector<f64>,
        k_new: usize,
        problem: &SaddleProblem,
    ) -> Result<()> {
        for &i in indices {
            if i >= self.entries.len() {
                return invalid(format!("memory index {i} out of range for N = {}", self.entries.len()));
            }
            if k_new <= self.stamps[i] {
                return invalid(format!(
                    "refresh stamp {k_new} must exceed current stamp {} of entry {i}",
                    self.stamps[i]
                ));
            }
        }
        for &i in indices {
            let fresh = problem.component_gradient(i, x_new)?;
            if self.update == AggregateUpdate::Incremental {
                self.aggregate += &fresh;
                self.aggregate -= &self.entries[i];
            }
            self.entries[i] = fresh;
            self.stamps[i] = k_new;
        }
        if self.update == AggregateUpdate::Resum && !indices.is_empty() {
            self.aggregate = ordered_sum(&self.entries);
        }
        Ok(())
    }
}

/// Functional form of [`GradientMemory::refresh`].
pub fn refresh_memory(
    memory: &GradientMemory,
    indices: &[usize],
    x_new: &DVector<f64>,
    k_new: usize,
    problem: &SaddleProblem,
) -> Result<GradientMemory> {
    let mut next = memory.clone();
    next.refresh(indices, x_new, k_new, problem)?;
    Ok(next)
}
