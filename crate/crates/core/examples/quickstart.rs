use nalgebra::DVector;
use pdpiag::certificates::{auto_stepsize, ProblemConstants, Theorem};
use pdpiag::problem::{quadratic_quadratic, QuadraticParams};
use pdpiag::solver::{run, DelaySchedule, ExtrapolationRule, RunConfig};

fn main() -> pdpiag::Result<()> {
    let inst = quadratic_quadratic(&QuadraticParams {
        seed: 7,
        ..Default::default()
    })?;
    let problem = &inst.problem;
    let consts = ProblemConstants::of(problem);

    // Cyclic refresh of N components gives delays up to N - 1.
    let max_delay = problem.num_components() - 1;
    let auto = auto_stepsize(&consts, max_delay, Theorem::Thm1, 1.0)?;
    println!("sigma = {:.3e}, tau = {:.3e}", auto.steps.sigma, auto.steps.tau);

    let mut config = RunConfig::new(auto.steps, ExtrapolationRule::Pdhg, DelaySchedule::Cyclic, 2000);
    if let Some(sad) = &inst.saddle {
        config.reference = Some((sad.x_hat.clone(), sad.y_hat.clone()));
    }
    let x0 = DVector::from_element(problem.d1(), 1.0);
    let y0 = DVector::zeros(problem.d2());
    let trace = run(problem, &x0, &y0, &config, &mut [])?;

    let last = trace.last();
    println!("k = {}, |x - x*| = {:?}, |y - y*| = {:?}", last.k, last.dist_x, last.dist_y);
    Ok(())
}
