//! The online engines — projected gradient descent, the queue-driven engine,
//! and its prediction-aware variant — behind one trait, registered by name,
//! all producing the same replayable trace format.

mod baseline;
mod ogd;
mod predictive;

pub use baseline::run_baseline;
pub use ogd::run_ogd;
pub use predictive::run_predictive;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::core::{DecisionVector, ScheduleParams};
use crate::environments::Environment;
use crate::error::Error;
use crate::predictors::Predictor;
use crate::subproblem::SolverSettings;
use crate::Result;

/// Everything an engine consumes for one run.
pub struct RunContext<'a> {
    pub env: &'a Environment,
    pub schedule: &'a ScheduleParams,
    /// Hint provider; required by the prediction-aware engine, ignored by the
    /// others.
    pub predictor: Option<&'a dyn Predictor>,
    pub solver: SolverSettings,
}

/// Complete record of one run: every iterate, queue state, hint, and
/// realized per-step quantity, exactly as the engine produced them. The
/// bound checkers replay runs from this record alone (plus the environment).
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// Engine registry name.
    pub algorithm: String,
    /// Environment identifier the run was produced on.
    pub env_id: String,
    /// Rates the run used.
    pub schedule: ScheduleParams,
    /// Played points; `x[t-1]` is `x_t`, length exactly the horizon.
    pub x: Vec<DecisionVector>,
    /// The one-past-the-horizon point the engine computed but never played.
    pub x_final: DecisionVector,
    /// Auxiliary pre-points of the prediction-aware engine (`z[t-1]` is
    /// `z_t`); empty for the other engines.
    pub z: Vec<DecisionVector>,
    /// One-past-the-horizon auxiliary point, when the engine has one.
    pub z_final: Option<DecisionVector>,
    /// Queue after the step-`t` update; `q[t-1]` is `q_t`.
    pub q: Vec<Vec<f64>>,
    /// Lookahead queue; `q_hat[t-1]` is `q_hat_t`.
    pub q_hat: Vec<Vec<f64>>,
    /// Initial lookahead queue `q_hat_0` (nonzero only if the engine's start
    /// violates the first constraint block).
    pub q_hat0: Vec<f64>,
    /// Hints consumed, `hints[t-1]` is `h_t`; the first entry is the zero
    /// vector because the start is chosen before any information arrives.
    /// Empty for engines that take no hints.
    pub hints: Vec<Vec<f64>>,
    /// Realized cost values `f_t(x_t)`.
    pub cost_values: Vec<f64>,
    /// Realized violations `[g_t(x_t)]_+`, exactly the vectors the queue
    /// consumed.
    pub violations: Vec<Vec<f64>>,
    /// Number of proximal solves whose optimality certificate missed its
    /// tolerance.
    pub solver_flags: usize,
    /// Largest absolute tolerance any proximal solve was held to (0 for the
    /// solver-free engine).
    pub solver_tol: f64,
}

impl RunTrace {
    fn new(algorithm: &str, ctx: &RunContext) -> Self {
        let t_total = ctx.env.horizon;
        RunTrace {
            algorithm: algorithm.to_string(),
            env_id: ctx.env.id.clone(),
            schedule: ctx.schedule.clone(),
            x: Vec::with_capacity(t_total),
            x_final: ctx.env.witness.clone(),
            z: Vec::new(),
            z_final: None,
            q: Vec::with_capacity(t_total),
            q_hat: Vec::with_capacity(t_total),
            q_hat0: Vec::new(),
            hints: Vec::new(),
            cost_values: Vec::with_capacity(t_total),
            violations: Vec::with_capacity(t_total),
            solver_flags: 0,
            solver_tol: 0.0,
        }
    }

    /// Horizon of the recorded run.
    pub fn horizon(&self) -> usize {
        self.x.len()
    }

    /// Sum of realized cost values.
    pub fn total_cost(&self) -> f64 {
        self.cost_values.iter().sum()
    }

    /// Sum of all positive-part violations over steps and rows.
    pub fn total_violation(&self) -> f64 {
        self.violations.iter().flatten().sum()
    }

    /// Final queue `q_T`.
    pub fn q_final(&self) -> &[f64] {
        self.q.last().expect("trace holds at least one step")
    }

    fn absorb_solve(&mut self, sol: &crate::subproblem::StepSolution) {
        if !sol.certified {
            self.solver_flags += 1;
        }
        if sol.tol > self.solver_tol {
            self.solver_tol = sol.tol;
        }
    }
}

fn validate_context(ctx: &RunContext) -> Result<()> {
    if ctx.schedule.horizon != ctx.env.horizon {
        return Err(Error::InvalidConfiguration(format!(
            "schedule horizon {} != environment horizon {}",
            ctx.schedule.horizon, ctx.env.horizon
        )));
    }
    if ctx.schedule.g_bound != ctx.env.g_bound {
        return Err(Error::InvalidConfiguration(format!(
            "schedule G {} != environment G {}",
            ctx.schedule.g_bound, ctx.env.g_bound
        )));
    }
    Ok(())
}

/// An engine: consumes a context, produces a trace.
pub trait OnlineAlgorithm: Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;
    /// Whether [`RunContext::predictor`] must be set.
    fn needs_predictor(&self) -> bool {
        false
    }
    /// Executes one full run.
    fn run(&self, ctx: &RunContext) -> Result<RunTrace>;
}

struct ProjectedGradient;
struct QueueEngine;
struct PredictiveQueueEngine;

impl OnlineAlgorithm for ProjectedGradient {
    fn name(&self) -> &'static str {
        "ogd"
    }
    fn run(&self, ctx: &RunContext) -> Result<RunTrace> {
        run_ogd(ctx)
    }
}

impl OnlineAlgorithm for QueueEngine {
    fn name(&self) -> &'static str {
        "baseline"
    }
    fn run(&self, ctx: &RunContext) -> Result<RunTrace> {
        run_baseline(ctx)
    }
}

impl OnlineAlgorithm for PredictiveQueueEngine {
    fn name(&self) -> &'static str {
        "predictive"
    }
    fn needs_predictor(&self) -> bool {
        true
    }
    fn run(&self, ctx: &RunContext) -> Result<RunTrace> {
        run_predictive(ctx)
    }
}

/// Name-indexed engines.
pub fn registry() -> &'static BTreeMap<&'static str, &'static dyn OnlineAlgorithm> {
    static OGD: ProjectedGradient = ProjectedGradient;
    static BASELINE: QueueEngine = QueueEngine;
    static PREDICTIVE: PredictiveQueueEngine = PredictiveQueueEngine;
    static REGISTRY: OnceLock<BTreeMap<&'static str, &'static dyn OnlineAlgorithm>> =
        OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut map: BTreeMap<&'static str, &'static dyn OnlineAlgorithm> = BTreeMap::new();
        map.insert(OGD.name(), &OGD as _);
        map.insert(BASELINE.name(), &BASELINE as _);
        map.insert(PREDICTIVE.name(), &PREDICTIVE as _);
        map
    })
}

/// Looks an engine up by registry name.
pub fn by_name(name: &str) -> Result<&'static dyn OnlineAlgorithm> {
    registry().get(name).copied().ok_or_else(|| {
        Error::invalid_parameter(
            "algorithm",
            format!(
                "unknown engine `{name}`; known: {}",
                registry().keys().copied().collect::<Vec<_>>().join(", ")
            ),
        )
    })
}
