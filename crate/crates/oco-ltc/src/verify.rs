//! Per-run certificate checks.
//!
//! Three independent checks run against recorded traces:
//!
//! * an exact accounting identity between the cumulative violation and the
//!   final virtual queue,
//! * the pair of per-step descent inequalities that drive the guarantees,
//!   evaluated term by term at full precision,
//! * the end-to-end cost and violation bounds for coupled step sizes.
//!
//! Every check returns a report with the computed quantities and explicit
//! tolerances; failures are reports with `pass == false`, while malformed
//! inputs (wrong trace shape, infeasible reference points, uncoupled step
//! sizes) are errors.

use crate::algorithms::RunTrace;
use crate::core::DecisionVector;
use crate::environments::Environment;
use crate::error::Error;
use crate::linalg;
use crate::metrics::{self, Comparator};
use crate::Result;

/// Outcome of the violation/queue accounting identity.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueIdentityReport {
    /// Sum of positive constraint parts over all steps and rows.
    pub violation_total: f64,
    /// Final queue length divided by the queue gain.
    pub queue_scaled: f64,
    /// Absolute difference between the two.
    pub residual: f64,
    /// Allowed residual: `1e-9 * max(1, violation_total)`.
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that the final queue is exactly the gain times the cumulative
/// violation. Holds for every engine because they all fold the recorded
/// per-step positive parts into the queue with a constant gain.
pub fn check_queue_identity(trace: &RunTrace) -> Result<QueueIdentityReport> {
    let gamma = trace.schedule.gamma;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid_parameter(
            "gamma",
            "queue identity needs a positive queue gain",
        ));
    }
    if trace.q.is_empty() {
        return Err(Error::invalid_input("check_queue_identity", "empty trace"));
    }
    let violation_total = trace.total_violation();
    let queue_scaled = linalg::norm1(trace.q_final()) / gamma;
    let residual = (violation_total - queue_scaled).abs();
    let tolerance = 1e-9 * violation_total.max(1.0);
    Ok(QueueIdentityReport {
        violation_total,
        queue_scaled,
        residual,
        tolerance,
        pass: residual <= tolerance,
    })
}

/// Slack of the descent inequality pair at one prefix of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefixSlack {
    /// Number of leading steps covered.
    pub horizon: usize,
    /// Right side minus left side of the cost-side inequality.
    pub slack_first: f64,
    /// Right side minus left side of the queue-side inequality.
    pub slack_second: f64,
    /// Slack this prefix may dip below zero: accumulated solver tolerance
    /// plus a rounding floor.
    pub allowance: f64,
}

/// Term-by-term evaluation of the two descent inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    /// Slack of the cost-side inequality at the full horizon.
    pub slack_first: f64,
    /// Slack of the queue-side inequality at the full horizon.
    pub slack_second: f64,
    /// The quadratic coupling term as it arises from the update identity:
    /// the interim point's positive parts paired with the played point's.
    pub cross_term_played: f64,
    /// The same term with the reference point's positive parts instead of
    /// the played point's; reported for comparison, not checked.
    pub cross_term_comparator: f64,
    /// Slack either inequality may dip below zero at the full horizon.
    pub allowance: f64,
    pub pass_first: bool,
    pub pass_second: bool,
    /// Per-prefix slacks when requested, one entry per step.
    pub per_prefix: Option<Vec<PrefixSlack>>,
}

fn require_predictive_shape(trace: &RunTrace) -> Result<usize> {
    let t = trace.horizon();
    if t == 0 {
        return Err(Error::invalid_input("descent check", "empty trace"));
    }
    let shaped = trace.z.len() == t
        && trace.z_final.is_some()
        && trace.hints.len() == t
        && trace.q.len() == t
        && trace.q_hat.len() == t
        && trace.violations.len() == t
        && trace.cost_values.len() == t;
    if !shaped {
        return Err(Error::invalid_input(
            "descent check",
            "trace lacks the interim points, hints, or queue history of the \
             hint-driven engine",
        ));
    }
    Ok(t)
}

fn require_trace_matches_env(trace: &RunTrace, env: &Environment) -> Result<()> {
    if trace.env_id != env.id || trace.horizon() != env.horizon {
        return Err(Error::invalid_input(
            "certificate check",
            "trace does not belong to this environment",
        ));
    }
    Ok(())
}

/// Evaluates both descent inequalities on a recorded hint-driven run against
/// a reference point `x_star`, which may be any point of the domain (it need
/// not satisfy the functional constraints).
///
/// With `prefix_mode` the slacks are reported after every prefix of the run,
/// which locates the first failing step when a check goes red.
pub fn check_lemma1(
    trace: &RunTrace,
    env: &Environment,
    x_star: &DecisionVector,
    prefix_mode: bool,
) -> Result<LemmaReport> {
    require_trace_matches_env(trace, env)?;
    let horizon = require_predictive_shape(trace)?;
    if x_star.dim() != env.domain.dim() {
        return Err(Error::DimensionMismatch {
            context: "check_lemma1",
            expected: env.domain.dim(),
            got: x_star.dim(),
        });
    }
    if !env.domain.contains(x_star.as_slice(), 1e-9) {
        return Err(Error::invalid_input(
            "check_lemma1",
            "reference point is outside the domain",
        ));
    }

    let eta = trace.schedule.eta;
    let gamma = trace.schedule.gamma;
    let g_bound = trace.schedule.g_bound;
    let m = env.constraints.m();
    let zeros = vec![0.0; m];
    let xs = x_star.as_slice();

    let mut s_queue_cost = 0.0; // sum_t gamma <q_{t-1}, [g_t(x_t)]_+>
    let mut s_cost = 0.0; // sum_t f_t(x_t)
    let mut s_comp = 0.0; // sum_t f_t(x_star)
    let mut s_hint_err = 0.0; // sum_t (eta/2) ||c_t - h_t||^2
    let mut s_breg = 0.0; // sum_t (1/eta) (D(z_t, x*) - D(x*, z_{t+1}))
    let mut s_dxz = 0.0; // sum_t D(x_t, z_t), raw
    let mut s_qhat_star = 0.0; // sum_t gamma <qhat_{t-1}, [g_t(x*)]_+>
    let mut s_cross_played = 0.0; // sum_t gamma^2 <[g_t(z_t)]_+, [g_t(x_t)]_+>
    let mut s_cross_comp = 0.0; // same with x* in place of x_t

    let mut per_prefix = prefix_mode.then(|| Vec::with_capacity(horizon));
    let mut slack_first = 0.0;
    let mut slack_second = 0.0;
    let mut allowance = 0.0;

    for t in 1..=horizon {
        let c_t = env.costs[t - 1].gradient();
        let h_t = &trace.hints[t - 1];
        let z_t = &trace.z[t - 1];
        let z_next = if t < horizon {
            &trace.z[t]
        } else {
            trace.z_final.as_ref().expect("shape checked")
        };
        let x_t = &trace.x[t - 1];
        let v_t = &trace.violations[t - 1];
        let q_prev: &[f64] = if t >= 2 { &trace.q[t - 2] } else { &zeros };
        let q_hat_prev: &[f64] = if t >= 2 {
            &trace.q_hat[t - 2]
        } else {
            &trace.q_hat0
        };
        let g_z = env.constraints.violations(t, z_t)?;
        let g_star = env.constraints.violations(t, x_star)?;

        s_queue_cost += gamma * linalg::dot(q_prev, v_t);
        s_cost += trace.cost_values[t - 1];
        s_comp += linalg::dot(c_t, xs);
        s_hint_err += 0.5 * eta * linalg::dist2_sq(c_t, h_t);
        s_breg += (0.5 * linalg::dist2_sq(z_t.as_slice(), xs)
            - 0.5 * linalg::dist2_sq(xs, z_next.as_slice()))
            / eta;
        s_dxz += 0.5 * linalg::dist2_sq(x_t.as_slice(), z_t.as_slice());
        s_qhat_star += gamma * linalg::dot(q_hat_prev, &g_star);
        s_cross_played += gamma * gamma * linalg::dot(&g_z, v_t);
        s_cross_comp += gamma * gamma * linalg::dot(&g_z, &g_star);

        let need_slacks = prefix_mode || t == horizon;
        if need_slacks {
            let lhs1 = s_queue_cost + (s_cost - s_comp);
            let rhs1 =
                s_hint_err + s_breg - s_dxz / eta + s_qhat_star - s_cross_played;
            let q_t = &trace.q[t - 1];
            let lhs2 = 0.5 * linalg::dot(q_t, q_t);
            let rhs2 = s_hint_err + s_qhat_star - (s_cost - s_comp)
                + s_breg
                + (gamma * gamma * g_bound * g_bound - 1.0 / eta) * s_dxz;
            let magnitude = 1.0
                + lhs1.abs().max(rhs1.abs()).max(lhs2.abs()).max(rhs2.abs());
            let allow = t as f64 * trace.solver_tol + 1e-12 * magnitude;
            slack_first = rhs1 - lhs1;
            slack_second = rhs2 - lhs2;
            allowance = allow;
            if let Some(list) = per_prefix.as_mut() {
                list.push(PrefixSlack {
                    horizon: t,
                    slack_first,
                    slack_second,
                    allowance: allow,
                });
            }
        }
    }

    Ok(LemmaReport {
        slack_first,
        slack_second,
        cross_term_played: s_cross_played,
        cross_term_comparator: s_cross_comp,
        allowance,
        pass_first: slack_first >= -allowance,
        pass_second: slack_second >= -allowance,
        per_prefix,
    })
}

/// Outcome of the end-to-end cost and violation bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    /// Total cost of the run minus the reference point's total cost.
    pub regret: f64,
    /// Hint-error bound on the regret.
    pub regret_bound: f64,
    pub pass_regret: bool,
    /// Cumulative violation of the run.
    pub violation: f64,
    /// Bound on the cumulative violation.
    pub violation_bound: f64,
    pub pass_violation: bool,
    /// The violation bound with the dimension and factor-of-two constants
    /// of the underlying derivation made explicit instead of absorbed;
    /// reported for comparison, not checked.
    pub violation_bound_conservative: f64,
    /// `sum_t ||c_t - h_t||^2`, without the step-size factor.
    pub hint_error_sum: f64,
    /// Largest absolute per-step cost the run realized.
    pub realized_f_max: f64,
    /// Per-step cost bound the violation bound was built from.
    pub f_bound_used: f64,
    /// Constraint value of the reference point actually used (nonpositive).
    pub comparator_violation: f64,
}

/// Checks the end-to-end regret and violation bounds of a hint-driven run
/// with coupled step sizes against a feasible comparator.
///
/// The comparator must satisfy every step's constraints: a residual above
/// `1e-6` is rejected, while a residual within it is removed by mixing
/// toward the environment's strictly feasible witness (the bounds hold for
/// any feasible point, so deepening only weakens the comparator
/// negligibly).
pub fn check_theorem3_bounds(
    trace: &RunTrace,
    env: &Environment,
    comparator: &Comparator,
) -> Result<TheoremReport> {
    require_trace_matches_env(trace, env)?;
    let horizon = require_predictive_shape(trace)?;

    let eta = trace.schedule.eta;
    let gamma = trace.schedule.gamma;
    let g_bound = trace.schedule.g_bound;
    if !(gamma > 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidConfiguration(
            "bound check needs positive step sizes".into(),
        ));
    }
    let coupling = gamma * gamma * g_bound * g_bound * eta;
    if (coupling - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfiguration(format!(
            "bound check needs coupled step sizes with gamma^2 G^2 eta = 1, \
             got {coupling}"
        )));
    }

    if comparator.point.dim() != env.domain.dim() {
        return Err(Error::DimensionMismatch {
            context: "check_theorem3_bounds",
            expected: env.domain.dim(),
            got: comparator.point.dim(),
        });
    }
    if !env.domain.contains(comparator.point.as_slice(), 1e-9) {
        return Err(Error::invalid_input(
            "check_theorem3_bounds",
            "comparator is outside the domain",
        ));
    }
    let (resid, _) = metrics::max_violation(env, &comparator.point)?;
    if resid > 1e-6 {
        return Err(Error::invalid_input(
            "check_theorem3_bounds",
            format!("comparator violates the constraints by {resid}"),
        ));
    }
    let point = metrics::mix_to_feasible(env, &comparator.point, resid)?;
    let (comparator_violation, _) = metrics::max_violation(env, &point)?;

    let f_bound = env.f_bound;
    let mut realized_f_max: f64 = 0.0;
    for v in &trace.cost_values {
        realized_f_max = realized_f_max.max(v.abs());
    }
    if realized_f_max > f_bound * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::InvalidConfiguration(format!(
            "realized per-step cost {realized_f_max} exceeds the declared \
             bound {f_bound}"
        )));
    }

    let mut hint_error_sum = 0.0;
    let mut comp_cost = 0.0;
    for t in 1..=horizon {
        let c_t = env.costs[t - 1].gradient();
        hint_error_sum += linalg::dist2_sq(c_t, &trace.hints[t - 1]);
        comp_cost += linalg::dot(c_t, point.as_slice());
    }
    let start_gap = 0.5 * linalg::dist2_sq(trace.z[0].as_slice(), point.as_slice());

    let regret = trace.total_cost() - comp_cost;
    let regret_bound = 0.5 * eta * hint_error_sum + start_gap / eta;
    let solver_allow = horizon as f64 * trace.solver_tol;
    let pass_regret = regret <= regret_bound + solver_allow;

    let violation = trace.total_violation();
    let base = regret_bound + f_bound * horizon as f64;
    let violation_bound = base.max(0.0).sqrt() / gamma;
    let violation_bound_conservative =
        (2.0 * env.constraints.m() as f64 * base.max(0.0)).sqrt() / gamma;
    let widened = (base + 2.0 * solver_allow).max(0.0).sqrt() / gamma + solver_allow;
    let pass_violation = violation <= widened;

    Ok(TheoremReport {
        regret,
        regret_bound,
        pass_regret,
        violation,
        violation_bound,
        pass_violation,
        violation_bound_conservative,
        hint_error_sum,
        realized_f_max,
        f_bound_used: f_bound,
        comparator_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{run_baseline, run_ogd, run_predictive, RunContext};
    use crate::core::{make_schedule, ConstraintBlock, ScheduleParams, ScheduleVariant};
    use crate::environments::{
        generate_environment, ConstraintKind, CostKind, EnvironmentSpec,
    };
    use crate::geometry::FeasibleSetX;
    use crate::predictors::{self, PredictorParams};
    use crate::subproblem::SolverSettings;
    use crate::testutil::{inactive_block, manual_env};

    fn gen_env(p: usize, m: usize, horizon: usize, tv: bool, seed: u64) -> Environment {
        generate_environment(&EnvironmentSpec {
            p,
            m,
            horizon,
            cost: CostKind::IidRandom,
            constraints: if tv {
                ConstraintKind::TimeVaryingAffine { sigma: 0.05 }
            } else {
                ConstraintKind::StaticAffine
            },
            domain: FeasibleSetX::centered_box(p, 1.0).unwrap(),
            g_bound: 1.0,
            f_bound: None,
            margin: 0.1,
            band: 0.2,
            seed,
        })
        .unwrap()
    }

    fn predictive_run(env: &Environment, kind: &str, c_exp: f64) -> RunTrace {
        let sched = make_schedule(env.horizon, c_exp, ScheduleVariant::Predictive, env.g_bound)
            .unwrap()
            .with_a_exp(0.5)
            .unwrap();
        let pred = predictors::build(
            kind,
            &PredictorParams {
                a_exp: 0.5,
                delta: None,
                seed: 11,
            },
        )
        .unwrap();
        run_predictive(&RunContext {
            env,
            schedule: &sched,
            predictor: Some(pred.as_ref()),
            solver: SolverSettings::default(),
        })
        .unwrap()
    }

    #[test]
    fn identity_passes_on_all_three_engines() {
        let tv_env = gen_env(2, 2, 30, true, 4);
        let trace = predictive_run(&tv_env, "oracle-decay", 0.5);
        let rep = check_queue_identity(&trace).unwrap();
        assert!(rep.pass, "residual {} tol {}", rep.residual, rep.tolerance);
        assert!(rep.violation_total > 0.0, "constraints never activated");

        let st_env = gen_env(2, 2, 30, false, 5);
        let sched =
            make_schedule(30, 0.5, ScheduleVariant::Baseline, st_env.g_bound).unwrap();
        let ctx = RunContext {
            env: &st_env,
            schedule: &sched,
            predictor: None,
            solver: SolverSettings::default(),
        };
        assert!(check_queue_identity(&run_baseline(&ctx).unwrap()).unwrap().pass);
        assert!(check_queue_identity(&run_ogd(&ctx).unwrap()).unwrap().pass);
    }

    #[test]
    fn identity_reports_zero_residual_when_nothing_ever_violates() {
        let env = manual_env(
            vec![vec![0.4, -0.3]; 6],
            inactive_block(2),
            FeasibleSetX::centered_box(2, 1.0).unwrap(),
            1.0,
            2.0,
        );
        let trace = predictive_run(&env, "zero", 0.5);
        let rep = check_queue_identity(&trace).unwrap();
        assert_eq!(rep.violation_total, 0.0);
        assert_eq!(rep.queue_scaled, 0.0);
        assert_eq!(rep.residual, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn identity_flags_a_corrupted_queue() {
        let env = gen_env(2, 2, 30, true, 4);
        let mut trace = predictive_run(&env, "oracle-decay", 0.5);
        for v in trace.q.last_mut().unwrap() {
            *v *= 1.5;
        }
        let rep = check_queue_identity(&trace).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn identity_rejects_traces_without_a_queue_gain() {
        let env = gen_env(2, 1, 10, false, 7);
        let sched = ScheduleParams::custom(10, 0.3, 0.0, 1.0, ScheduleVariant::Baseline)
            .unwrap();
        let ctx = RunContext {
            env: &env,
            schedule: &sched,
            predictor: None,
            solver: SolverSettings::default(),
        };
        let trace = run_ogd(&ctx).unwrap();
        assert!(check_queue_identity(&trace).is_err());
    }

    #[test]
    fn descent_inequalities_hold_on_generated_runs() {
        for (seed, tv, kind) in [
            (1u64, true, "oracle-decay"),
            (2, false, "perfect"),
            (3, true, "zero"),
            (4, false, "last-value"),
        ] {
            let env = gen_env(2, 2, 40, tv, seed);
            let trace = predictive_run(&env, kind, 0.5);
            let comp = metrics::compute_comparator(&env).unwrap();
            let rep = check_lemma1(&trace, &env, &comp.point, true).unwrap();
            assert!(
                rep.pass_first && rep.pass_second,
                "seed {seed} kind {kind}: slacks {} / {} allowance {}",
                rep.slack_first,
                rep.slack_second,
                rep.allowance
            );
            for pre in rep.per_prefix.as_ref().unwrap() {
                assert!(
                    pre.slack_first >= -pre.allowance
                        && pre.slack_second >= -pre.allowance,
                    "seed {seed} kind {kind} prefix {}: {} / {} allowance {}",
                    pre.horizon,
                    pre.slack_first,
                    pre.slack_second,
                    pre.allowance
                );
            }
        }
    }

    #[test]
    fn descent_inequalities_hold_for_arbitrary_domain_points() {
        // The inequalities hold for any reference point of the domain, even
        // one that violates the functional constraints.
        let env = gen_env(2, 2, 30, true, 9);
        let trace = predictive_run(&env, "oracle-decay", 0.5);
        let corner = DecisionVector::new(vec![1.0, 1.0]).unwrap();
        let rep = check_lemma1(&trace, &env, &corner, false).unwrap();
        assert!(rep.pass_first && rep.pass_second);
    }

    #[test]
    fn descent_checker_needs_a_hint_driven_trace() {
        let env = gen_env(2, 1, 10, false, 3);
        let sched = make_schedule(10, 0.5, ScheduleVariant::Baseline, 1.0).unwrap();
        let ctx = RunContext {
            env: &env,
            schedule: &sched,
            predictor: None,
            solver: SolverSettings::default(),
        };
        let trace = run_ogd(&ctx).unwrap();
        let point = env.witness.clone();
        assert!(check_lemma1(&trace, &env, &point, false).is_err());
    }

    #[test]
    fn descent_checker_rejects_points_outside_the_domain() {
        let env = gen_env(2, 1, 10, false, 3);
        let trace = predictive_run(&env, "zero", 0.5);
        let outside = DecisionVector::new(vec![2.0, 0.0]).unwrap();
        assert!(check_lemma1(&trace, &env, &outside, false).is_err());
    }

    #[test]
    fn descent_checker_flags_a_corrupted_run() {
        let env = gen_env(2, 2, 40, true, 6);
        let mut trace = predictive_run(&env, "oracle-decay", 0.5);
        let horizon = trace.horizon();
        let gamma = trace.schedule.gamma;

        // Replace a stretch of played points by the cost-maximizing corner,
        // keeping the recorded costs, violations, and queue history
        // consistent with the tampered points so only the inequalities can
        // notice.
        let first_bad = horizon / 2;
        for t in first_bad..first_bad + 8 {
            let c_t = env.costs[t].gradient();
            let corner: Vec<f64> =
                c_t.iter().map(|c| if *c >= 0.0 { 1.0 } else { -1.0 }).collect();
            trace.x[t] = DecisionVector::new(corner).unwrap();
            trace.cost_values[t] = env.costs[t].value(&trace.x[t]).unwrap();
            trace.violations[t] =
                env.constraints.violations(t + 1, &trace.x[t]).unwrap();
        }
        let mut q = trace.q[first_bad - 1].clone();
        for t in first_bad..horizon {
            let hat_inc: Vec<f64> = trace
                .q_hat[t]
                .iter()
                .zip(&trace.q[t])
                .map(|(h, q)| h - q)
                .collect();
            q = linalg::axpy(&q, gamma, &trace.violations[t]);
            trace.q[t] = q.clone();
            trace.q_hat[t] = linalg::axpy(&q, 1.0, &hat_inc);
        }

        let comp = metrics::compute_comparator(&env).unwrap();
        let rep = check_lemma1(&trace, &env, &comp.point, false).unwrap();
        assert!(
            !rep.pass_first || !rep.pass_second,
            "tampered run passed: slacks {} / {}",
            rep.slack_first,
            rep.slack_second
        );
    }

    #[test]
    fn bounds_hold_on_generated_runs() {
        for (seed, tv, kind) in
            [(1u64, true, "oracle-decay"), (2, false, "perfect"), (5, true, "last-value")]
        {
            let env = gen_env(2, 2, 50, tv, seed);
            let trace = predictive_run(&env, kind, 0.5);
            let comp = metrics::compute_comparator(&env).unwrap();
            let rep = check_theorem3_bounds(&trace, &env, &comp).unwrap();
            assert!(rep.pass_regret, "seed {seed}: {} > {}", rep.regret, rep.regret_bound);
            assert!(
                rep.pass_violation,
                "seed {seed}: {} > {}",
                rep.violation, rep.violation_bound
            );
            assert!(rep.violation_bound_conservative > rep.violation_bound);
            assert!(rep.comparator_violation <= 0.0);
            assert!(rep.realized_f_max <= rep.f_bound_used * (1.0 + 1e-9));
        }
    }

    #[test]
    fn perfect_hints_reduce_the_regret_bound_to_the_start_terms() {
        // With exact hints, only the unpredictable first step contributes
        // hint error, so the bound collapses to
        // (eta/2) ||c_1||^2 + D(z_1, x*) / eta.
        let env = gen_env(2, 2, 40, false, 8);
        let trace = predictive_run(&env, "perfect", 0.5);
        let comp = metrics::compute_comparator(&env).unwrap();
        let rep = check_theorem3_bounds(&trace, &env, &comp).unwrap();
        let c1 = env.costs[0].gradient();
        let c1_sq = linalg::dot(c1, c1);
        assert!((rep.hint_error_sum - c1_sq).abs() <= 1e-12 * c1_sq.max(1.0));
        let eta = trace.schedule.eta;
        let d = 0.5 * linalg::dist2_sq(trace.z[0].as_slice(), comp.point.as_slice());
        let want = 0.5 * eta * c1_sq + d / eta;
        assert!((rep.regret_bound - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn bounds_checker_rejects_uncoupled_step_sizes() {
        let env = gen_env(2, 1, 10, false, 2);
        let sched = ScheduleParams::custom(10, 0.2, 0.7, 1.0, ScheduleVariant::Predictive)
            .unwrap();
        let pred = predictors::build(
            "zero",
            &PredictorParams {
                a_exp: 0.5,
                delta: None,
                seed: 0,
            },
        )
        .unwrap();
        let trace = run_predictive(&RunContext {
            env: &env,
            schedule: &sched,
            predictor: Some(pred.as_ref()),
            solver: SolverSettings::default(),
        })
        .unwrap();
        let comp = metrics::compute_comparator(&env).unwrap();
        let err = check_theorem3_bounds(&trace, &env, &comp).unwrap_err();
        assert!(matches!(err, Error::InvalidConfiguration(_)));
    }

    #[test]
    fn bounds_checker_rejects_clearly_infeasible_comparators() {
        let env = manual_env(
            vec![vec![-1.0]; 5],
            ConstraintBlock::Static {
                a: vec![vec![1.0]],
                b: vec![0.3],
            },
            FeasibleSetX::centered_box(1, 1.0).unwrap(),
            1.0,
            2.0,
        );
        let trace = predictive_run(&env, "zero", 0.5);
        let bad = Comparator {
            point: DecisionVector::new(vec![0.8]).unwrap(),
            objective: -4.0,
            max_violation: 0.5,
        };
        assert!(check_theorem3_bounds(&trace, &env, &bad).is_err());
    }

    #[test]
    fn bounds_checker_deepens_a_marginally_infeasible_comparator() {
        let env = manual_env(
            vec![vec![-1.0]; 5],
            ConstraintBlock::Static {
                a: vec![vec![1.0]],
                b: vec![0.3],
            },
            FeasibleSetX::centered_box(1, 1.0).unwrap(),
            1.0,
            2.0,
        );
        let trace = predictive_run(&env, "zero", 0.5);
        let marginal = Comparator {
            point: DecisionVector::new(vec![0.3 + 5e-7]).unwrap(),
            objective: -5.0 * (0.3 + 5e-7),
            max_violation: 5e-7,
        };
        let rep = check_theorem3_bounds(&trace, &env, &marginal).unwrap();
        assert!(rep.comparator_violation <= 0.0);
        assert!(rep.pass_regret && rep.pass_violation);
    }

    #[test]
    fn checkers_reject_a_trace_from_a_different_environment() {
        let env_a = gen_env(2, 2, 20, true, 1);
        let env_b = gen_env(2, 2, 20, true, 2);
        let trace = predictive_run(&env_a, "zero", 0.5);
        let comp = metrics::compute_comparator(&env_b).unwrap();
        assert!(check_lemma1(&trace, &env_b, &comp.point, false).is_err());
        assert!(check_theorem3_bounds(&trace, &env_b, &comp).is_err());
    }
}
