//! The prediction-aware queue engine.

use super::{validate_context, RunContext, RunTrace};
use crate::core::VirtualQueue;
use crate::error::Error;
use crate::geometry::{regularizer_minimizer, Regularizer};
use crate::subproblem::{solve_composite_step, CompositeStepSpec};
use crate::Result;

/// Runs the prediction-aware queue engine.
///
/// Each step interleaves two certified proximal solves around the queue
/// update:
///
/// ```text
/// q_t     = q_(t-1) + gamma * [g_t(x_t)]_+
/// z_(t+1) = argmin_X  eta * <z, c_t> + eta * gamma * <q_hat_(t-1), [g_t(z)]_+> + D(z, z_t)
/// q_hat_t = q_t + gamma * [g_(t+1)(z_(t+1))]_+
/// x_(t+1) = argmin_X  eta * <x, h_(t+1)> + eta * gamma * <q_hat_t, [g_(t+1)(x)]_+> + D(x, z_(t+1))
/// ```
///
/// with `D` the quadratic Bregman divergence, `x_1 = z_1` the regularizer
/// minimizer, `q_0 = 0`, and `q_hat_0 = gamma * [g_1(z_1)]_+`. The recorded
/// first hint is the zero vector: the start is chosen before any information
/// arrives, and `x_1 = z_1` is exactly the step the zero hint and zero queue
/// weight produce. At the horizon the lookahead reuses the final constraint
/// block and the final hint; the resulting one-past-the-end points are
/// recorded but never played.
pub fn run_predictive(ctx: &RunContext) -> Result<RunTrace> {
    validate_context(ctx)?;
    let predictor = ctx.predictor.ok_or_else(|| {
        Error::InvalidConfiguration("the prediction-aware engine requires a predictor".into())
    })?;
    let env = ctx.env;
    let eta = ctx.schedule.eta;
    let gamma = ctx.schedule.gamma;
    let m = env.constraints.m();
    let p = env.domain.dim();
    let t_total = env.horizon;

    let mut trace = RunTrace::new("predictive", ctx);

    let start = regularizer_minimizer(Regularizer::Quadratic, &env.domain)?;
    let mut x = start.clone();
    let mut z = start;
    let mut queue = VirtualQueue::zero(m)?
        .advance(gamma, &vec![0.0; m], &env.constraints.violations(1, &z)?)?;
    trace.q_hat0 = queue.q_hat().to_vec();
    trace.hints.push(vec![0.0; p]);

    for t in 1..=t_total {
        let cost = &env.costs[t - 1];
        let viol = env.constraints.violations(t, &x)?;
        trace.cost_values.push(cost.value(&x)?);
        trace.violations.push(viol.clone());
        trace.x.push(x.clone());
        trace.z.push(z.clone());

        let z_sol = solve_composite_step(
            &CompositeStepSpec {
                linear: cost.gradient(),
                queue_weights: queue.q_hat(),
                eta,
                gamma,
                constraints: &env.constraints,
                step: t,
                anchor: &z,
                domain: &env.domain,
                regularizer: Regularizer::Quadratic,
                f_bound: env.f_bound,
            },
            &ctx.solver,
        )?;
        trace.absorb_solve(&z_sol);
        let z_next = z_sol.point;

        let hat_viol = env.constraints.violations(t + 1, &z_next)?;
        queue = queue.advance(gamma, &viol, &hat_viol)?;
        trace.q.push(queue.q().to_vec());
        trace.q_hat.push(queue.q_hat().to_vec());

        // The one-past-the-horizon lookahead reuses the final hint.
        let hint = if t < t_total {
            predictor.hint(t + 1, env)?
        } else {
            trace.hints[t - 1].clone()
        };
        let x_sol = solve_composite_step(
            &CompositeStepSpec {
                linear: &hint,
                queue_weights: queue.q_hat(),
                eta,
                gamma,
                constraints: &env.constraints,
                step: t + 1,
                anchor: &z_next,
                domain: &env.domain,
                regularizer: Regularizer::Quadratic,
                f_bound: env.f_bound,
            },
            &ctx.solver,
        )?;
        trace.absorb_solve(&x_sol);

        if t < t_total {
            trace.hints.push(hint);
        }
        x = x_sol.point;
        z = z_next;
    }
    trace.x_final = x;
    trace.z_final = Some(z);
    Ok(trace)
}
