//! Config-driven experiment harness.
//!
//! A strict TOML config (unknown keys are rejected everywhere) selects the
//! engine, the environment family, the hint provider, and the solver budget;
//! the runner executes the requested cells in parallel, emits a stable
//! summary CSV plus human-readable reports, and exposes the default
//! verification battery. See [`runner`] for execution and output layout.

pub mod runner;

use std::path::Path;

use serde::Deserialize;

use crate::algorithms;
use crate::environments::{ConstraintKind, CostKind, EnvironmentSpec};
use crate::error::Error;
use crate::geometry::FeasibleSetX;
use crate::predictors::{self, PredictorParams};
use crate::subproblem::SolverSettings;
use crate::Result;

/// Which command the config is validated for; sweeps need enough horizons
/// to fit a rate, the other modes do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Sweep,
    Verify,
}

/// Whole config file. Every section is optional and defaults to a small,
/// fast, valid setup; unknown keys anywhere are an error.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub environment: EnvironmentSection,
    pub predictor: PredictorSection,
    pub solver: SolverSettings,
    pub verify: VerifySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentSection::default(),
            environment: EnvironmentSection::default(),
            predictor: PredictorSection::default(),
            solver: SolverSettings::default(),
            verify: VerifySection::default(),
        }
    }
}

/// What to run and at which rates.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Engine registry name: `ogd`, `baseline`, or `predictive`.
    pub algorithm: String,
    /// Horizons to run, strictly increasing.
    pub horizons: Vec<usize>,
    /// Seeds per horizon; environment seeds are `0..seeds` (shifted by the
    /// CLI seed override).
    pub seeds: u64,
    /// Step-size exponent: the proximal step is `T^(-c_exp)`.
    pub c_exp: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            algorithm: "predictive".into(),
            horizons: vec![500],
            seeds: 3,
            c_exp: 0.5,
        }
    }
}

/// Environment family, one cell per (horizon, seed).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    /// Decision dimension.
    pub p: usize,
    /// Constraint rows per step.
    pub m: usize,
    /// Cost process: `iid`, `drifting`, or `piecewise`.
    pub cost: String,
    /// Drift rate of the `drifting` cost process.
    pub sigma: f64,
    /// Segment count of the `piecewise` cost process.
    pub segments: usize,
    /// Constraint process: `static` or `time-varying`.
    pub constraints: String,
    /// Row drift rate of the `time-varying` constraint process.
    pub constraint_sigma: f64,
    /// Strict feasibility margin of the witness.
    pub margin: f64,
    /// Extra random slack width on constraint offsets.
    pub band: f64,
    /// Declared bound on cost-gradient norms and constraint Frobenius norms.
    pub g_bound: f64,
    /// Declared per-step value bound; omitted means "declare the realized
    /// bound".
    pub f_bound: Option<f64>,
    /// Domain shape: `box` or `ball`.
    pub domain: String,
    /// Half-width of the (origin-centered) box domain.
    pub half_width: f64,
    /// Center of the ball domain; omitted means the origin.
    pub center: Option<Vec<f64>>,
    /// Radius of the ball domain.
    pub radius: f64,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        EnvironmentSection {
            p: 2,
            m: 2,
            cost: "iid".into(),
            sigma: 0.05,
            segments: 1,
            constraints: "static".into(),
            constraint_sigma: 0.02,
            margin: 0.1,
            band: 0.2,
            g_bound: 1.0,
            f_bound: None,
            domain: "box".into(),
            half_width: 1.0,
            center: None,
            radius: 1.0,
        }
    }
}

/// Hint provider for the prediction-aware engine.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorSection {
    /// Provider registry name.
    pub kind: String,
    /// Hint accuracy exponent of the decaying-error provider.
    pub a_exp: f64,
    /// Hint error scale; omitted means the environment's gradient bound.
    pub delta: Option<f64>,
    /// Base seed of the provider's own randomness.
    pub seed: u64,
}

impl Default for PredictorSection {
    fn default() -> Self {
        PredictorSection {
            kind: "zero".into(),
            a_exp: 0.5,
            delta: None,
            seed: 0,
        }
    }
}

/// Grid of the default verification battery.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Horizons of the battery grid, strictly increasing.
    pub horizons: Vec<usize>,
    /// Decision dimensions of the grid, strictly increasing.
    pub p: Vec<usize>,
    /// Constraint row counts of the grid, strictly increasing.
    pub m: Vec<usize>,
    /// Seeds per grid cell.
    pub seeds_per_cell: u64,
    /// Whether the descent check also reports every prefix.
    pub prefix_mode: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            horizons: vec![50, 500],
            p: vec![1, 2, 5],
            m: vec![1, 3],
            seeds_per_cell: 6,
            prefix_mode: false,
        }
    }
}

/// Reads and parses a config file; parse errors carry the file path, while
/// semantic errors from [`ExperimentConfig::validate`] carry the field path.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn field_err(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn check_strictly_increasing(path: &str, values: &[usize]) -> Result<()> {
    if values.is_empty() {
        return Err(field_err(path, "must not be empty"));
    }
    if values[0] == 0 {
        return Err(field_err(path, "entries must be >= 1"));
    }
    for w in values.windows(2) {
        if w[1] <= w[0] {
            return Err(field_err(path, "must be strictly increasing"));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Semantic validation for a command; returns the first problem found,
    /// naming the offending field.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let exp = &self.experiment;
        algorithms::by_name(&exp.algorithm)
            .map_err(|e| field_err("experiment.algorithm", e.to_string()))?;
        check_strictly_increasing("experiment.horizons", &exp.horizons)?;
        if mode == Mode::Sweep && exp.horizons.len() < 4 {
            return Err(field_err(
                "experiment.horizons",
                "a sweep needs at least 4 horizons to fit a rate",
            ));
        }
        if exp.seeds == 0 {
            return Err(field_err("experiment.seeds", "must be >= 1"));
        }
        if !(exp.c_exp > 0.0 && exp.c_exp < 1.0) {
            return Err(field_err("experiment.c_exp", "must lie in (0, 1)"));
        }

        let env = &self.environment;
        if env.p == 0 {
            return Err(field_err("environment.p", "must be >= 1"));
        }
        if env.m == 0 {
            return Err(field_err("environment.m", "must be >= 1"));
        }
        match env.cost.as_str() {
            "iid" | "drifting" | "piecewise" => {}
            other => {
                return Err(field_err(
                    "environment.cost",
                    format!("unknown cost process `{other}` (iid, drifting, piecewise)"),
                ))
            }
        }
        if !(env.sigma >= 0.0) || !env.sigma.is_finite() {
            return Err(field_err("environment.sigma", "must be finite and >= 0"));
        }
        if env.segments == 0 {
            return Err(field_err("environment.segments", "must be >= 1"));
        }
        match env.constraints.as_str() {
            "static" | "time-varying" => {}
            other => {
                return Err(field_err(
                    "environment.constraints",
                    format!("unknown constraint process `{other}` (static, time-varying)"),
                ))
            }
        }
        if env.constraints == "time-varying" && exp.algorithm == "baseline" {
            return Err(field_err(
                "environment.constraints",
                "the no-prediction queue engine needs a fixed constraint block",
            ));
        }
        if !(env.constraint_sigma >= 0.0) || !env.constraint_sigma.is_finite() {
            return Err(field_err(
                "environment.constraint_sigma",
                "must be finite and >= 0",
            ));
        }
        if !(env.margin > 0.0) || !env.margin.is_finite() {
            return Err(field_err("environment.margin", "must be finite and > 0"));
        }
        if !(env.band >= 0.0) || !env.band.is_finite() {
            return Err(field_err("environment.band", "must be finite and >= 0"));
        }
        if !(env.g_bound > 0.0) || !env.g_bound.is_finite() {
            return Err(field_err("environment.g_bound", "must be finite and > 0"));
        }
        if let Some(f) = env.f_bound {
            if !(f > 0.0) || !f.is_finite() {
                return Err(field_err("environment.f_bound", "must be finite and > 0"));
            }
        }
        match env.domain.as_str() {
            "box" => {
                if !(env.half_width > 0.0) || !env.half_width.is_finite() {
                    return Err(field_err(
                        "environment.half_width",
                        "must be finite and > 0",
                    ));
                }
            }
            "ball" => {
                if !(env.radius > 0.0) || !env.radius.is_finite() {
                    return Err(field_err("environment.radius", "must be finite and > 0"));
                }
                if let Some(c) = &env.center {
                    if c.len() != env.p {
                        return Err(field_err(
                            "environment.center",
                            format!("needs exactly p = {} coordinates", env.p),
                        ));
                    }
                    if c.iter().any(|v| !v.is_finite()) {
                        return Err(field_err("environment.center", "must be finite"));
                    }
                }
            }
            other => {
                return Err(field_err(
                    "environment.domain",
                    format!("unknown domain shape `{other}` (box, ball)"),
                ))
            }
        }

        let pred = &self.predictor;
        if !predictors::registry().contains_key(pred.kind.as_str()) {
            return Err(field_err(
                "predictor.kind",
                format!(
                    "unknown hint provider `{}`; known: {}",
                    pred.kind,
                    predictors::registry()
                        .keys()
                        .copied()
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            ));
        }
        if !(0.0..1.0).contains(&pred.a_exp) {
            return Err(field_err("predictor.a_exp", "must lie in [0, 1)"));
        }
        if let Some(d) = pred.delta {
            if !(d > 0.0) || !d.is_finite() {
                return Err(field_err("predictor.delta", "must be finite and > 0"));
            }
        }

        if !(self.solver.tol_rel > 0.0) || !self.solver.tol_rel.is_finite() {
            return Err(field_err("solver.tol_rel", "must be finite and > 0"));
        }
        if self.solver.max_iters == 0 {
            return Err(field_err("solver.max_iters", "must be >= 1"));
        }

        if mode == Mode::Verify {
            let v = &self.verify;
            check_strictly_increasing("verify.horizons", &v.horizons)?;
            check_strictly_increasing("verify.p", &v.p)?;
            check_strictly_increasing("verify.m", &v.m)?;
            if v.seeds_per_cell == 0 {
                return Err(field_err("verify.seeds_per_cell", "must be >= 1"));
            }
        }
        Ok(())
    }

    /// The generator input for one (horizon, seed) cell.
    pub fn environment_spec(&self, horizon: usize, seed: u64) -> Result<EnvironmentSpec> {
        let env = &self.environment;
        let cost = match env.cost.as_str() {
            "iid" => CostKind::IidRandom,
            "drifting" => CostKind::Drifting { sigma: env.sigma },
            "piecewise" => CostKind::PiecewiseConstant {
                segments: env.segments,
            },
            other => {
                return Err(field_err(
                    "environment.cost",
                    format!("unknown cost process `{other}`"),
                ))
            }
        };
        let constraints = match env.constraints.as_str() {
            "static" => ConstraintKind::StaticAffine,
            "time-varying" => ConstraintKind::TimeVaryingAffine {
                sigma: env.constraint_sigma,
            },
            other => {
                return Err(field_err(
                    "environment.constraints",
                    format!("unknown constraint process `{other}`"),
                ))
            }
        };
        let domain = match env.domain.as_str() {
            "box" => FeasibleSetX::centered_box(env.p, env.half_width)?,
            "ball" => {
                let center = env.center.clone().unwrap_or_else(|| vec![0.0; env.p]);
                FeasibleSetX::new_ball(center, env.radius)?
            }
            other => {
                return Err(field_err(
                    "environment.domain",
                    format!("unknown domain shape `{other}`"),
                ))
            }
        };
        Ok(EnvironmentSpec {
            p: env.p,
            m: env.m,
            horizon,
            cost,
            constraints,
            domain,
            g_bound: env.g_bound,
            f_bound: env.f_bound,
            margin: env.margin,
            band: env.band,
            seed,
        })
    }

    /// Hint-provider parameters with the per-cell seed mixed in, so cells
    /// draw independent hint noise.
    pub fn predictor_params(&self, cell_seed: u64) -> PredictorParams {
        PredictorParams {
            a_exp: self.predictor.a_exp,
            delta: self.predictor.delta,
            seed: self
                .predictor
                .seed
                .wrapping_add(cell_seed.wrapping_mul(0x100_0000_01b3)),
        }
    }
}
