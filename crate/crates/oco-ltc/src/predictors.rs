//! Hint providers for the prediction-aware engine, behind a common trait and
//! registered by name.
//!
//! A hint `h_t` is the engine's guess of the step-`t` cost gradient, asked
//! for *before* that cost is revealed. Providers are pure functions of
//! `(their parameters, the environment, t)`, so hints are deterministic and
//! independent of query order.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::environments::Environment;
use crate::error::Error;
use crate::linalg;
use crate::Result;

/// A hint provider.
pub trait Predictor: Send + Sync {
    /// Registry name.
    fn name(&self) -> &'static str;

    /// Hint for the step-`t` cost gradient, `2 <= t <= horizon`. Engines
    /// never ask for step 1 (the first iterate is chosen before any
    /// information arrives) and reuse the final hint for their one-past-the-
    /// horizon lookahead.
    fn hint(&self, t: usize, env: &Environment) -> Result<Vec<f64>>;
}

/// Parameters shared by the provider constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictorParams {
    /// Accuracy-decay exponent `a`: hint error scales as `T^(-a/2)`.
    pub a_exp: f64,
    /// Error magnitude multiplier; `None` means "use the environment's G".
    pub delta: Option<f64>,
    /// Seed for the error directions.
    pub seed: u64,
}

impl Default for PredictorParams {
    fn default() -> Self {
        PredictorParams {
            a_exp: 0.5,
            delta: None,
            seed: 0,
        }
    }
}

fn check_t(t: usize, env: &Environment) -> Result<()> {
    if t < 2 || t > env.horizon {
        return Err(Error::invalid_input(
            "Predictor::hint",
            format!("step {t} outside 2..={}", env.horizon),
        ));
    }
    Ok(())
}

/// Always hints the zero vector: the no-information reference.
pub struct ZeroPredictor;

impl Predictor for ZeroPredictor {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn hint(&self, t: usize, env: &Environment) -> Result<Vec<f64>> {
        check_t(t, env)?;
        Ok(vec![0.0; env.costs[t - 1].gradient().len()])
    }
}

/// Hints the true upcoming gradient: the full-information reference.
pub struct PerfectPredictor;

impl Predictor for PerfectPredictor {
    fn name(&self) -> &'static str {
        "perfect"
    }

    fn hint(&self, t: usize, env: &Environment) -> Result<Vec<f64>> {
        check_t(t, env)?;
        Ok(env.costs[t - 1].gradient().to_vec())
    }
}

/// Hints the previous gradient, `h_t = c_(t-1)`: accurate exactly when the
/// environment drifts slowly.
pub struct LastValuePredictor;

impl Predictor for LastValuePredictor {
    fn name(&self) -> &'static str {
        "last-value"
    }

    fn hint(&self, t: usize, env: &Environment) -> Result<Vec<f64>> {
        check_t(t, env)?;
        Ok(env.costs[t - 2].gradient().to_vec())
    }
}

/// Hints `c_t` plus a seeded random unit direction scaled to exactly
/// `delta * T^(-a/2)`, so the hint error has a known decay rate by
/// construction.
pub struct OracleDecayPredictor {
    params: PredictorParams,
}

impl Predictor for OracleDecayPredictor {
    fn name(&self) -> &'static str {
        "oracle-decay"
    }

    fn hint(&self, t: usize, env: &Environment) -> Result<Vec<f64>> {
        check_t(t, env)?;
        let delta = self.params.delta.unwrap_or(env.g_bound);
        let magnitude = delta * (env.horizon as f64).powf(-self.params.a_exp / 2.0);
        // The direction is a pure function of (seed, t): bitwise stable no
        // matter in which order steps are queried.
        let mut rng = ChaCha20Rng::seed_from_u64(
            self.params
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(t as u64),
        );
        let dir = loop {
            let v: Vec<f64> = (0..env.costs[t - 1].gradient().len())
                .map(|_| rng.gen_range(-1.0f64..1.0))
                .collect();
            let n = linalg::norm2(&v);
            if n > 1e-3 && n <= 1.0 {
                break v.iter().map(|x| x / n).collect::<Vec<f64>>();
            }
        };
        Ok(linalg::axpy(env.costs[t - 1].gradient(), magnitude, &dir))
    }
}

type PredictorCtor = fn(&PredictorParams) -> Result<Box<dyn Predictor>>;

/// Name-indexed constructors for every provider.
pub fn registry() -> &'static BTreeMap<&'static str, PredictorCtor> {
    static REGISTRY: OnceLock<BTreeMap<&'static str, PredictorCtor>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut map: BTreeMap<&'static str, PredictorCtor> = BTreeMap::new();
        map.insert("zero", |_| Ok(Box::new(ZeroPredictor)));
        map.insert("perfect", |_| Ok(Box::new(PerfectPredictor)));
        map.insert("last-value", |_| Ok(Box::new(LastValuePredictor)));
        map.insert("oracle-decay", |params| {
            if !(0.0..1.0).contains(&params.a_exp) {
                return Err(Error::invalid_parameter(
                    "a_exp",
                    format!("{} outside [0, 1)", params.a_exp),
                ));
            }
            if let Some(d) = params.delta {
                if !(d > 0.0) || !d.is_finite() {
                    return Err(Error::invalid_parameter("delta", format!("{d}")));
                }
            }
            Ok(Box::new(OracleDecayPredictor { params: *params }))
        });
        map
    })
}

/// Builds a provider by registry name.
pub fn build(name: &str, params: &PredictorParams) -> Result<Box<dyn Predictor>> {
    registry()
        .get(name)
        .ok_or_else(|| {
            Error::invalid_parameter(
                "predictor",
                format!(
                    "unknown kind `{name}`; known: {}",
                    registry().keys().copied().collect::<Vec<_>>().join(", ")
                ),
            )
        })
        .and_then(|ctor| ctor(params))
}
