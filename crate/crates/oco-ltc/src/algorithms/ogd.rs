//! Projected gradient descent, the constraint-blind reference engine.

use super::{validate_context, RunContext, RunTrace};
use crate::core::VirtualQueue;
use crate::geometry::{regularizer_minimizer, Regularizer};
use crate::Result;

/// Runs `x_(t+1) = proj_X(x_t - eta * c_t)` from the regularizer minimizer.
///
/// The functional constraints never influence the step — they only show up in
/// the realized violations — which is exactly what makes this engine the
/// reference point for the queue-driven ones. It still carries a shadow queue
/// fed by its own violations so every trace supports the same queue-replay
/// and identity checks.
pub fn run_ogd(ctx: &RunContext) -> Result<RunTrace> {
    validate_context(ctx)?;
    let env = ctx.env;
    let eta = ctx.schedule.eta;
    let gamma = ctx.schedule.gamma;
    let m = env.constraints.m();

    let mut trace = RunTrace::new("ogd", ctx);
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

        let target: Vec<f64> = x
            .as_slice()
            .iter()
            .zip(cost.gradient())
            .map(|(xi, ci)| xi - eta * ci)
            .collect();
        let next = env.domain.project(&target)?;
        trace.x.push(x);
        x = next;
    }
    trace.x_final = x;
    Ok(trace)
}
