//! Seeded generation of cost sequences and constraint blocks, with exact
//! post-generation verification of the declared bounds.
//!
//! Everything is a pure function of the spec (including its seed): two calls
//! with equal specs produce bit-identical environments. Bounds are *declared*
//! by the generated environment and *verified* exactly — suprema of affine
//! functions over boxes and balls are closed-form — rather than estimated
//! from samples.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::core::{ConstraintBlock, DecisionVector, LinearCost};
use crate::error::Error;
use crate::geometry::{regularizer_minimizer, FeasibleSetX, Regularizer};
use crate::linalg;
use crate::Result;

/// How per-step cost gradients evolve.
#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// Fresh uniformly random direction each step, norm exactly `G`.
    IidRandom,
    /// Direction random-walks on the radius-`G` sphere; per-step movement is
    /// bounded by `2 * sigma * sqrt(p) * G`.
    Drifting { sigma: f64 },
    /// Constant within each of `segments` equal spans of the horizon.
    PiecewiseConstant { segments: usize },
}

/// How the constraint block evolves.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    /// One affine block for the whole run.
    StaticAffine,
    /// Row directions random-walk step to step (offsets keep the witness
    /// margin intact).
    TimeVaryingAffine { sigma: f64 },
}

/// Input to the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    /// Decision dimension.
    pub p: usize,
    /// Constraint rows per step.
    pub m: usize,
    /// Horizon.
    pub horizon: usize,
    pub cost: CostKind,
    pub constraints: ConstraintKind,
    pub domain: FeasibleSetX,
    /// Declared bound on cost-gradient norms and on the constraint matrix
    /// Frobenius norm (which also bounds its spectral norm and every row).
    pub g_bound: f64,
    /// Declared bound on `|f_t|` and `g_t` over the domain; when `None`, the
    /// tight realized bound is declared.
    pub f_bound: Option<f64>,
    /// Strict feasibility margin of the witness: `g_t(witness) <= -margin`.
    pub margin: f64,
    /// Width of the random extra slack added on top of the margin when
    /// placing constraint offsets; keeps boundaries near — but not on — the
    /// witness so violations actually occur.
    pub band: f64,
    pub seed: u64,
}

/// A fully realized run environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub id: String,
    /// `costs[t-1]` is the step-`t` cost.
    pub costs: Vec<LinearCost>,
    pub constraints: ConstraintBlock,
    pub domain: FeasibleSetX,
    /// A point strictly feasible for every step's constraints; also the
    /// engines' common start (the regularizer minimizer), so runs begin with
    /// an exactly feasible iterate and an all-zero queue.
    pub witness: DecisionVector,
    pub g_bound: f64,
    pub f_bound: f64,
    pub horizon: usize,
}

/// Exact realized bounds, reported by [`verify_bounds`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    /// Largest cost-gradient 2-norm.
    pub max_cost_norm: f64,
    /// Largest per-step constraint-matrix Frobenius norm.
    pub max_frobenius_norm: f64,
    /// Largest per-step constraint-row 2-norm.
    pub max_row_norm: f64,
    /// Largest realized `sup_X |f_t|` / `sup_X g_t^j` (what `F` must cover).
    pub realized_f: f64,
    /// Smallest strict-feasibility slack of the witness, `min_t,j -g_t^j(w)`.
    pub witness_slack: f64,
}

/// Relative slop for the exact-bound comparisons: generation scales draws to
/// land on the declared values, so only rounding noise must be absorbed.
const BOUND_SLOP: f64 = 1e-9;

fn unit_direction<R: Rng>(rng: &mut R, p: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = linalg::norm2(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

fn renormalize(v: &[f64], norm: f64) -> Vec<f64> {
    let n = linalg::norm2(v);
    v.iter().map(|x| x * norm / n).collect()
}

fn cost_sequence(spec: &EnvironmentSpec, rng: &mut ChaCha20Rng) -> Result<Vec<Vec<f64>>> {
    let g = spec.g_bound;
    let t_total = spec.horizon;
    match &spec.cost {
        CostKind::IidRandom => Ok((0..t_total)
            .map(|_| unit_direction(rng, spec.p).iter().map(|x| x * g).collect())
            .collect()),
        CostKind::Drifting { sigma } => {
            if *sigma < 0.0 || !sigma.is_finite() {
                return Err(Error::invalid_parameter("sigma", format!("{sigma}")));
            }
            let mut out = Vec::with_capacity(t_total);
            let mut cur: Vec<f64> = unit_direction(rng, spec.p).iter().map(|x| x * g).collect();
            out.push(cur.clone());
            for _ in 1..t_total {
                let xi: Vec<f64> = (0..spec.p).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let shifted = linalg::axpy(&cur, *sigma * g, &xi);
                cur = renormalize(&shifted, g);
                out.push(cur.clone());
            }
            Ok(out)
        }
        CostKind::PiecewiseConstant { segments } => {
            if *segments == 0 || *segments > t_total {
                return Err(Error::invalid_parameter(
                    "segments",
                    format!("{segments} outside 1..={t_total}"),
                ));
            }
            let seg_len = t_total.div_ceil(*segments);
            let mut out = Vec::with_capacity(t_total);
            let mut cur: Vec<f64> = vec![];
            for t in 0..t_total {
                if t % seg_len == 0 {
                    cur = unit_direction(rng, spec.p).iter().map(|x| x * g).collect();
                }
                out.push(cur.clone());
            }
            Ok(out)
        }
    }
}

fn constraint_block(
    spec: &EnvironmentSpec,
    witness: &DecisionVector,
    rng: &mut ChaCha20Rng,
) -> Result<ConstraintBlock> {
    // Each row has norm G / sqrt(m), so the per-step matrix has Frobenius
    // norm exactly G; that certifies the spectral norm (and every row norm)
    // under the same declared bound.
    let row_norm = spec.g_bound / (spec.m as f64).sqrt();
    let dirs: Vec<Vec<f64>> = (0..spec.m).map(|_| unit_direction(rng, spec.p)).collect();
    let offsets: Vec<f64> = (0..spec.m)
        .map(|_| spec.margin + spec.band * rng.gen_range(0.0..1.0))
        .collect();
    let offset_for = |row: &[f64], j: usize| linalg::dot(row, witness.as_slice()) + offsets[j];

    match &spec.constraints {
        ConstraintKind::StaticAffine => {
            let rows: Vec<Vec<f64>> = dirs
                .iter()
                .map(|d| d.iter().map(|x| x * row_norm).collect())
                .collect();
            let b: Vec<f64> = rows.iter().enumerate().map(|(j, r)| offset_for(r, j)).collect();
            ConstraintBlock::new_static(rows, b)
        }
        ConstraintKind::TimeVaryingAffine { sigma } => {
            if *sigma < 0.0 || !sigma.is_finite() {
                return Err(Error::invalid_parameter(
                    "constraint sigma",
                    format!("{sigma}"),
                ));
            }
            let mut cur = dirs;
            let mut a_all = Vec::with_capacity(spec.horizon);
            let mut b_all = Vec::with_capacity(spec.horizon);
            for t in 0..spec.horizon {
                if t > 0 {
                    cur = cur
                        .iter()
                        .map(|d| {
                            let xi: Vec<f64> =
                                (0..spec.p).map(|_| rng.gen_range(-1.0..1.0)).collect();
                            renormalize(&linalg::axpy(d, *sigma, &xi), 1.0)
                        })
                        .collect();
                }
                let rows: Vec<Vec<f64>> = cur
                    .iter()
                    .map(|d| d.iter().map(|x| x * row_norm).collect())
                    .collect();
                let b: Vec<f64> = rows.iter().enumerate().map(|(j, r)| offset_for(r, j)).collect();
                a_all.push(rows);
                b_all.push(b);
            }
            ConstraintBlock::new_time_varying(a_all, b_all)
        }
    }
}

/// Generates the environment described by the spec and verifies every
/// declared bound before returning it.
pub fn generate_environment(spec: &EnvironmentSpec) -> Result<Environment> {
    if spec.p == 0 || spec.m == 0 || spec.horizon == 0 {
        return Err(Error::invalid_input(
            "EnvironmentSpec",
            "p, m, horizon must all be >= 1",
        ));
    }
    if spec.domain.dim() != spec.p {
        return Err(Error::DimensionMismatch {
            context: "EnvironmentSpec::domain",
            expected: spec.p,
            got: spec.domain.dim(),
        });
    }
    if !(spec.g_bound > 0.0) || !spec.g_bound.is_finite() {
        return Err(Error::invalid_parameter(
            "g_bound",
            format!("{}", spec.g_bound),
        ));
    }
    if !(spec.margin > 0.0) || spec.band < 0.0 {
        return Err(Error::invalid_input(
            "EnvironmentSpec",
            "margin must be positive and band nonnegative",
        ));
    }

    let witness = regularizer_minimizer(Regularizer::Quadratic, &spec.domain)?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let cost_vecs = cost_sequence(spec, &mut rng)?;
    let costs: Vec<LinearCost> = cost_vecs
        .into_iter()
        .map(LinearCost::new)
        .collect::<Result<_>>()?;
    let constraints = constraint_block(spec, &witness, &mut rng)?;

    let cost_tag = match &spec.cost {
        CostKind::IidRandom => "iid".to_string(),
        CostKind::Drifting { .. } => "drift".to_string(),
        CostKind::PiecewiseConstant { segments } => format!("pw{segments}"),
    };
    let cons_tag = if constraints.is_static() { "static" } else { "tv" };
    let id = format!(
        "{cost_tag}-{cons_tag}-p{}-m{}-T{}-s{}",
        spec.p, spec.m, spec.horizon, spec.seed
    );

    let mut env = Environment {
        id,
        costs,
        constraints,
        domain: spec.domain.clone(),
        witness,
        g_bound: spec.g_bound,
        f_bound: 0.0,
        horizon: spec.horizon,
    };
    // Declare F: the caller's value if given, otherwise the tight realized
    // bound; either way the verification below must pass.
    let report = realized_bounds(&env)?;
    env.f_bound = match spec.f_bound {
        Some(f) => f,
        None => report.realized_f,
    };
    verify_bounds(&env)?;
    Ok(env)
}

fn realized_bounds(env: &Environment) -> Result<BoundsReport> {
    let mut max_cost_norm: f64 = 0.0;
    let mut realized_f: f64 = 0.0;
    for c in &env.costs {
        max_cost_norm = max_cost_norm.max(linalg::norm2(c.gradient()));
        realized_f = realized_f.max(env.domain.sup_abs_linear(c.gradient())?);
    }
    let mut max_frob: f64 = 0.0;
    let mut max_row: f64 = 0.0;
    let mut witness_slack = f64::INFINITY;
    let distinct_steps = env.constraints.stored_steps().unwrap_or(1);
    for t in 1..=distinct_steps {
        let (a, b) = env.constraints.rows(t)?;
        let mut frob_sq = 0.0;
        for (row, off) in a.iter().zip(b) {
            let nsq = linalg::dot(row, row);
            frob_sq += nsq;
            max_row = max_row.max(nsq.sqrt());
            realized_f = realized_f.max(env.domain.sup_affine(row, *off)?);
            witness_slack =
                witness_slack.min(*off - linalg::dot(row, env.witness.as_slice()));
        }
        max_frob = max_frob.max(frob_sq.sqrt());
    }
    Ok(BoundsReport {
        max_cost_norm,
        max_frobenius_norm: max_frob,
        max_row_norm: max_row,
        realized_f,
        witness_slack,
    })
}

/// Recomputes every realized bound exactly and checks it against the declared
/// ones; the step index in the error identifies the first offending step.
pub fn verify_bounds(env: &Environment) -> Result<BoundsReport> {
    let slop = 1.0 + BOUND_SLOP;
    for (i, c) in env.costs.iter().enumerate() {
        let n = linalg::norm2(c.gradient());
        if n > env.g_bound * slop {
            return Err(Error::BoundViolated {
                step: i + 1,
                what: "cost gradient norm",
                value: n,
                bound: env.g_bound,
            });
        }
        let f = env.domain.sup_abs_linear(c.gradient())?;
        if f > env.f_bound * slop {
            return Err(Error::BoundViolated {
                step: i + 1,
                what: "sup |f_t| over the domain",
                value: f,
                bound: env.f_bound,
            });
        }
    }
    let distinct_steps = env.constraints.stored_steps().unwrap_or(1);
    for t in 1..=distinct_steps {
        let (a, b) = env.constraints.rows(t)?;
        let frob = a
            .iter()
            .map(|row| linalg::dot(row, row))
            .sum::<f64>()
            .sqrt();
        if frob > env.g_bound * slop {
            return Err(Error::BoundViolated {
                step: t,
                what: "constraint matrix Frobenius norm",
                value: frob,
                bound: env.g_bound,
            });
        }
        for (row, off) in a.iter().zip(b) {
            let sup = env.domain.sup_affine(row, *off)?;
            if sup > env.f_bound * slop {
                return Err(Error::BoundViolated {
                    step: t,
                    what: "sup g_t over the domain",
                    value: sup,
                    bound: env.f_bound,
                });
            }
            let slack = *off - linalg::dot(row, env.witness.as_slice());
            if slack < 0.0 {
                return Err(Error::BoundViolated {
                    step: t,
                    what: "witness feasibility slack",
                    value: slack,
                    bound: 0.0,
                });
            }
        }
    }
    realized_bounds(env)
}
