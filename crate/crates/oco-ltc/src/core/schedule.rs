//! Constant step-size / queue-rate schedules tied to the horizon.

use crate::error::Error;
use crate::Result;

/// Which engine family a schedule is built for; the queue rate differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleVariant {
    /// No-prediction queue engine: `gamma = 1 / (G * sqrt(2 * eta))`.
    Baseline,
    /// Prediction-aware queue engine: `gamma = 1 / (G * sqrt(eta))`, so that
    /// `gamma^2 * G^2 * eta = 1` to machine precision.
    Predictive,
}

/// Constant step size and queue rate for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleParams {
    /// Horizon.
    pub horizon: usize,
    /// Step-size exponent: `eta = T^(-c_exp)`.
    pub c_exp: f64,
    /// Hint-accuracy exponent carried through to reports (0 when no hint
    /// accuracy is being modeled).
    pub a_exp: f64,
    /// Step size.
    pub eta: f64,
    /// Queue rate.
    pub gamma: f64,
    /// Gradient-norm bound the rates are tied to.
    pub g_bound: f64,
    /// Which variant produced the rates.
    pub variant: ScheduleVariant,
}

/// Builds the constant schedule `eta = T^(-c_exp)` with the variant's queue
/// rate. `c_exp` must lie in the open interval (0, 1); `G` must be positive.
pub fn make_schedule(
    horizon: usize,
    c_exp: f64,
    variant: ScheduleVariant,
    g_bound: f64,
) -> Result<ScheduleParams> {
    if horizon == 0 {
        return Err(Error::invalid_parameter("horizon", "must be >= 1"));
    }
    if !(c_exp > 0.0 && c_exp < 1.0) {
        return Err(Error::invalid_parameter(
            "c_exp",
            format!("{c_exp} outside (0, 1)"),
        ));
    }
    if !(g_bound > 0.0) || !g_bound.is_finite() {
        return Err(Error::invalid_parameter(
            "g_bound",
            format!("{g_bound} must be positive and finite"),
        ));
    }
    let eta = (horizon as f64).powf(-c_exp);
    let gamma = match variant {
        ScheduleVariant::Baseline => 1.0 / (g_bound * (2.0 * eta).sqrt()),
        ScheduleVariant::Predictive => 1.0 / (g_bound * eta.sqrt()),
    };
    Ok(ScheduleParams {
        horizon,
        c_exp,
        a_exp: 0.0,
        eta,
        gamma,
        g_bound,
        variant,
    })
}

impl ScheduleParams {
    /// Same schedule with the hint-accuracy exponent recorded for reports.
    pub fn with_a_exp(mut self, a_exp: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a_exp) {
            return Err(Error::invalid_parameter(
                "a_exp",
                format!("{a_exp} outside [0, 1)"),
            ));
        }
        self.a_exp = a_exp;
        Ok(self)
    }

    /// Fully custom rates, bypassing the variant formulas. Meant for tests and
    /// experiments that need e.g. `gamma = 0` to switch the queue term off;
    /// runs built this way fail the prediction-schedule validation in the
    /// bound checkers, which is the intended behavior.
    pub fn custom(
        horizon: usize,
        eta: f64,
        gamma: f64,
        g_bound: f64,
        variant: ScheduleVariant,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid_parameter("horizon", "must be >= 1"));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::invalid_parameter("eta", format!("{eta}")));
        }
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::invalid_parameter("gamma", format!("{gamma}")));
        }
        Ok(ScheduleParams {
            horizon,
            c_exp: f64::NAN,
            a_exp: 0.0,
            eta,
            gamma,
            g_bound,
            variant,
        })
    }
}
