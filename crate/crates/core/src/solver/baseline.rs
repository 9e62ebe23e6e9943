//! Forward-backward splitting and PIAG for `min_x f(x) + h(x)`, i.e. the
//! saddle problem with `K = I`. The prox of `h` comes from the prox of `h*`
//! through the Moreau identity.

use nalgebra::DVector;

use super::{DelaySchedule, GradientMemory};
use crate::error::{check_dim, invalid, Error, Result};
use crate::problem::SaddleProblem;

fn require_identity(problem: &SaddleProblem) -> Result<()> {
    if !problem.coupling().is_identity() {
        return invalid("baseline solvers require the coupling K = I");
    }
    Ok(())
}

/// `prox_{sigma h}(x - sigma grad f(x))`.
pub fn fbs_step(problem: &SaddleProblem, x: &DVector<f64>, stepsize: f64) -> Result<DVector<f64>> {
    require_identity(problem)?;
    check_dim("x", x.len(), problem.d1())?;
    let g = problem.grad_full(x)?;
    let v = DVector::from_fn(x.len(), |j, _| x[j] - stepsize * g[j]);
    problem.conjugate().primal_prox(stepsize, &v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiagState {
    pub k: usize,
    pub x: DVector<f64>,
    pub memory: GradientMemory,
}

impl PiagState {
    pub fn new(problem: &SaddleProblem, x0: &DVector<f64>) -> Result<Self> {
        require_identity(problem)?;
        check_dim("x0", x0.len(), problem.d1())?;
        Ok(Self {
            k: 0,
            x: x0.clone(),
            memory: GradientMemory::new(problem, x0)?,
        })
    }
}

/// `x_{k+1} = prox_{sigma h}(x_k - sigma g_k)`, then the memory refresh the
/// schedule prescribes.
pub fn piag_step(
    problem: &SaddleProblem,
    state: &PiagState,
    sigma: f64,
    schedule: &DelaySchedule,
) -> Result<PiagState> {
    require_identity(problem)?;
    check_dim("x", state.x.len(), problem.d1())?;
    let g = state.memory.aggregate();
    let v = DVector::from_fn(state.x.len(), |j, _| state.x[j] - sigma * g[j]);
    let x_new = problem.conjugate().primal_prox(sigma, &v)?;
    if !x_new.iter().all(|t| t.is_finite()) {
        return Err(Error::Internal(format!("PIAG diverged at k = {}", state.k + 1)));
    }
    let mut memory = state.memory.clone();
    let refresh = schedule.refresh_set(state.k, memory.stamps());
    memory.refresh(&refresh, &x_new, state.k + 1, problem)?;
    Ok(PiagState {
        k: state.k + 1,
        x: x_new,
        memory,
    })
}
