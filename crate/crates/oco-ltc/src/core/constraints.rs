//! Affine constraint blocks `g_t(x) = A_t x - b_t` and their subgradients.

use crate::error::Error;
use crate::linalg;
use crate::Result;

use super::{positive_part, DecisionVector};

/// A block of `m` affine constraints per step, either one block shared by all
/// steps (static) or one block per step (time-varying).
///
/// Step indices are 1-based to match the run traces. For a time-varying block
/// the index `horizon + 1` is answered with the final block: the engines'
/// last lookahead step needs a block one past the horizon, and freezing the
/// final one is the convention used throughout this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintBlock {
    /// One `m x p` matrix and offset shared by every step.
    Static { a: Vec<Vec<f64>>, b: Vec<f64> },
    /// Per-step matrices and offsets; `a[t-1]` is the block for step `t`.
    TimeVarying {
        a: Vec<Vec<Vec<f64>>>,
        b: Vec<Vec<f64>>,
    },
}

fn validate_block(a: &[Vec<f64>], b: &[f64], p: usize) -> Result<()> {
    if a.is_empty() {
        return Err(Error::invalid_input("ConstraintBlock", "zero rows"));
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "ConstraintBlock rows vs offsets",
            expected: a.len(),
            got: b.len(),
        });
    }
    for row in a {
        if row.len() != p {
            return Err(Error::DimensionMismatch {
                context: "ConstraintBlock row length",
                expected: p,
                got: row.len(),
            });
        }
        if !linalg::all_finite(row) {
            return Err(Error::invalid_input("ConstraintBlock", "non-finite row"));
        }
    }
    if !linalg::all_finite(b) {
        return Err(Error::invalid_input("ConstraintBlock", "non-finite offset"));
    }
    Ok(())
}

impl ConstraintBlock {
    /// Builds a static block from rows `a` (each length `p`) and offsets `b`.
    pub fn new_static(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let p = a.first().map(|r| r.len()).unwrap_or(0);
        if p == 0 {
            return Err(Error::invalid_input("ConstraintBlock", "zero columns"));
        }
        validate_block(&a, &b, p)?;
        Ok(ConstraintBlock::Static { a, b })
    }

    /// Builds a time-varying block from per-step rows and offsets.
    pub fn new_time_varying(a: Vec<Vec<Vec<f64>>>, b: Vec<Vec<f64>>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::invalid_input(
                "ConstraintBlock",
                "empty or mismatched per-step blocks",
            ));
        }
        let p = a[0].first().map(|r| r.len()).unwrap_or(0);
        if p == 0 {
            return Err(Error::invalid_input("ConstraintBlock", "zero columns"));
        }
        let m = a[0].len();
        for (at, bt) in a.iter().zip(&b) {
            if at.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "ConstraintBlock per-step row count",
                    expected: m,
                    got: at.len(),
                });
            }
            validate_block(at, bt, p)?;
        }
        Ok(ConstraintBlock::TimeVarying { a, b })
    }

    /// Number of constraint rows per step.
    pub fn m(&self) -> usize {
        match self {
            ConstraintBlock::Static { a, .. } => a.len(),
            ConstraintBlock::TimeVarying { a, .. } => a[0].len(),
        }
    }

    /// Decision-space dimension.
    pub fn p(&self) -> usize {
        match self {
            ConstraintBlock::Static { a, .. } => a[0].len(),
            ConstraintBlock::TimeVarying { a, .. } => a[0][0].len(),
        }
    }

    /// True when one block is shared by every step.
    pub fn is_static(&self) -> bool {
        matches!(self, ConstraintBlock::Static { .. })
    }

    /// Number of distinct steps stored (`usize::MAX`-free: static blocks
    /// answer any step, so this is only meaningful for time-varying ones).
    pub fn stored_steps(&self) -> Option<usize> {
        match self {
            ConstraintBlock::Static { .. } => None,
            ConstraintBlock::TimeVarying { a, .. } => Some(a.len()),
        }
    }

    /// Rows and offsets for step `t` (1-based). Time-varying blocks answer
    /// `stored_steps() + 1` with the final block and reject anything later.
    pub fn rows(&self, t: usize) -> Result<(&[Vec<f64>], &[f64])> {
        if t == 0 {
            return Err(Error::invalid_input("ConstraintBlock::rows", "step 0"));
        }
        match self {
            ConstraintBlock::Static { a, b } => Ok((a, b)),
            ConstraintBlock::TimeVarying { a, b } => {
                let horizon = a.len();
                let idx = if t <= horizon {
                    t - 1
                } else if t == horizon + 1 {
                    horizon - 1
                } else {
                    return Err(Error::invalid_input(
                        "ConstraintBlock::rows",
                        format!("step {t} beyond stored horizon {horizon} + 1"),
                    ));
                };
                Ok((&a[idx], &b[idx]))
            }
        }
    }

    /// Evaluates `g_t(x) = A_t x - b_t`.
    pub fn eval(&self, t: usize, x: &DecisionVector) -> Result<Vec<f64>> {
        let (a, b) = self.rows(t)?;
        if x.dim() != self.p() {
            return Err(Error::DimensionMismatch {
                context: "ConstraintBlock::eval",
                expected: self.p(),
                got: x.dim(),
            });
        }
        Ok(a.iter()
            .zip(b)
            .map(|(row, off)| linalg::dot(row, x.as_slice()) - off)
            .collect())
    }

    /// Positive part of the constraint values, `[g_t(x)]_+`.
    pub fn violations(&self, t: usize, x: &DecisionVector) -> Result<Vec<f64>> {
        Ok(positive_part(&self.eval(t, x)?))
    }

    /// A subgradient of `x -> <w, [g_t(x)]_+>` at `x`:
    /// `sum_j w_j * 1[g_t^j(x) > 0] * a_t^j`.
    ///
    /// At a kink (`g_t^j(x) = 0`) the inactive branch is chosen, i.e. the row
    /// contributes nothing; that choice is itself a valid subgradient and
    /// keeps the map deterministic.
    pub fn weighted_violation_subgradient(
        &self,
        t: usize,
        x: &DecisionVector,
        w: &[f64],
    ) -> Result<Vec<f64>> {
        let (a, b) = self.rows(t)?;
        if x.dim() != self.p() {
            return Err(Error::DimensionMismatch {
                context: "weighted_violation_subgradient",
                expected: self.p(),
                got: x.dim(),
            });
        }
        if w.len() != a.len() {
            return Err(Error::DimensionMismatch {
                context: "weighted_violation_subgradient weights",
                expected: a.len(),
                got: w.len(),
            });
        }
        let mut s = vec![0.0; self.p()];
        for ((row, off), &wj) in a.iter().zip(b).zip(w) {
            debug_assert!(wj >= 0.0, "queue weights must be nonnegative");
            if linalg::dot(row, x.as_slice()) - off > 0.0 {
                linalg::axpy_mut(&mut s, wj, row);
            }
        }
        Ok(s)
    }
}
