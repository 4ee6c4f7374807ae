//! The queue-driven proximal engine for a fixed constraint block.

use super::{validate_context, RunContext, RunTrace};
use crate::core::VirtualQueue;
use crate::error::Error;
use crate::geometry::{regularizer_minimizer, Regularizer};
use crate::subproblem::{solve_composite_step, CompositeStepSpec};
use crate::Result;

/// Runs the no-prediction queue engine.
///
/// Per step it pays `f_t(x_t)`, folds the realized violation into the queue
/// twice (`q_t = q_(t-1) + gamma * v_t`, `q_hat_t = q_t + gamma * v_t`), and
/// steps to
///
/// ```text
/// x_(t+1) = argmin_X  eta * <x, c_t> + eta * gamma * <q_hat_t, [g(x)]_+> + ||x - x_t||^2
/// ```
///
/// The proximal weight is the full squared norm — twice the quadratic
/// Bregman divergence — so halving both linear weights turns this into the
/// Bregman-composite solve the certified solver handles; the argmin is
/// unchanged.
///
/// Only fixed constraint blocks are accepted: the engine weights the same
/// `g` it just measured, which is meaningless if the block changes under it.
pub fn run_baseline(ctx: &RunContext) -> Result<RunTrace> {
    validate_context(ctx)?;
    let env = ctx.env;
    if env.constraints.stored_steps().is_some() {
        return Err(Error::InvalidConfiguration(
            "the no-prediction queue engine requires a fixed constraint block; \
             got time-varying constraints"
                .into(),
        ));
    }
    let eta = ctx.schedule.eta;
    let gamma = ctx.schedule.gamma;
    let m = env.constraints.m();

    let mut trace = RunTrace::new("baseline", ctx);
    trace.q_hat0 = vec![0.0; m];

    let mut x = regularizer_minimizer(Regularizer::Quadratic, &env.domain)?;
    let mut queue = VirtualQueue::zero(m)?;
    for t in 1..=env.horizon {
        let cost = &env.costs[t - 1];
        let viol = env.constraints.violations(t, &x)?;
        queue = queue.advance(gamma, &viol, &viol)?;

        trace.cost_values.push(cost.value(&x)?);
        trace.q.push(queue.q().to_vec());
        trace.q_hat.push(queue.q_hat().to_vec());
        trace.violations.push(viol);
        trace.x.push(x.clone());

        let sol = solve_composite_step(
            &CompositeStepSpec {
                linear: cost.gradient(),
                queue_weights: queue.q_hat(),
                eta: eta / 2.0,
                gamma,
                constraints: &env.constraints,
                step: t,
                anchor: &x,
                domain: &env.domain,
                regularizer: Regularizer::Quadratic,
                f_bound: env.f_bound,
            },
            &ctx.solver,
        )?;
        trace.absorb_solve(&sol);
        x = sol.point;
    }
    trace.x_final = x;
    Ok(trace)
}
