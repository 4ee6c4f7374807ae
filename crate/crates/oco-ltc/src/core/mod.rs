//! Core value types: decision points, linear costs, constraint blocks,
//! virtual queues and step-size schedules.
//!
//! Everything here is an immutable value object after construction; engines
//! produce *new* queue states per step instead of mutating, which is what lets
//! the checkers replay a run bit-for-bit from its trace.

mod constraints;
mod queue;
mod schedule;

pub use constraints::ConstraintBlock;
pub use queue::VirtualQueue;
pub use schedule::{make_schedule, ScheduleParams, ScheduleVariant};

use crate::error::Error;
use crate::linalg;
use crate::Result;

/// A point in decision space (dimension `p >= 1`, all coordinates finite).
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    coords: Vec<f64>,
}

impl DecisionVector {
    /// Builds a decision vector, rejecting empty or non-finite input.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid_input("DecisionVector", "dimension 0"));
        }
        if !linalg::all_finite(&coords) {
            return Err(Error::invalid_input(
                "DecisionVector",
                "non-finite coordinate",
            ));
        }
        Ok(DecisionVector { coords })
    }

    /// The origin in dimension `p`.
    pub fn zeros(p: usize) -> Result<Self> {
        DecisionVector::new(vec![0.0; p])
    }

    /// Dimension of the point.
    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Coordinates as a slice.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }
}

impl AsRef<[f64]> for DecisionVector {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

/// A linear per-step cost `f(x) = <gradient, x>`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCost {
    gradient: Vec<f64>,
}

impl LinearCost {
    /// Builds a linear cost from its gradient vector.
    pub fn new(gradient: Vec<f64>) -> Result<Self> {
        if gradient.is_empty() {
            return Err(Error::invalid_input("LinearCost", "dimension 0"));
        }
        if !linalg::all_finite(&gradient) {
            return Err(Error::invalid_input("LinearCost", "non-finite coordinate"));
        }
        Ok(LinearCost { gradient })
    }

    /// Gradient (the cost is linear, so it is constant in `x`).
    #[inline]
    pub fn gradient(&self) -> &[f64] {
        &self.gradient
    }

    /// Cost value at `x`.
    pub fn value(&self, x: &DecisionVector) -> Result<f64> {
        if x.dim() != self.gradient.len() {
            return Err(Error::DimensionMismatch {
                context: "LinearCost::value",
                expected: self.gradient.len(),
                got: x.dim(),
            });
        }
        Ok(linalg::dot(&self.gradient, x.as_slice()))
    }
}

/// Componentwise positive part `max(v, 0)`.
pub fn positive_part(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decision_vector_rejects_bad_input() {
        assert!(DecisionVector::new(vec![]).is_err());
        assert!(DecisionVector::new(vec![f64::NAN]).is_err());
        assert!(DecisionVector::new(vec![f64::INFINITY, 0.0]).is_err());
        assert_eq!(DecisionVector::zeros(3).unwrap().dim(), 3);
    }

    #[test]
    fn linear_cost_value() {
        let c = LinearCost::new(vec![1.0, -2.0]).unwrap();
        let x = DecisionVector::new(vec![0.5, 0.25]).unwrap();
        assert_eq!(c.value(&x).unwrap(), 0.0);
        let bad = DecisionVector::zeros(3).unwrap();
        assert!(c.value(&bad).is_err());
    }

    #[test]
    fn positive_part_examples() {
        assert_eq!(positive_part(&[-1.0, 0.0, 2.5]), vec![0.0, 0.0, 2.5]);
        assert_eq!(positive_part(&[-3.0]), vec![0.0]);
        assert_eq!(positive_part(&[1e-12, -1e-12]), vec![1e-12, 0.0]);
    }

    proptest! {
        // Idempotence: applying the positive part twice changes nothing.
        #[test]
        fn positive_part_idempotent(v in proptest::collection::vec(-1e6f64..1e6, 1..8)) {
            let once = positive_part(&v);
            let twice = positive_part(&once);
            prop_assert_eq!(once, twice);
        }

        // Monotonicity: u <= v componentwise implies [u]+ <= [v]+.
        #[test]
        fn positive_part_monotone(
            v in proptest::collection::vec(-1e6f64..1e6, 1..8),
            bump in proptest::collection::vec(0.0f64..1e6, 1..8),
        ) {
            let n = v.len().min(bump.len());
            let u: Vec<f64> = (0..n).map(|i| v[i] - bump[i]).collect();
            let pu = positive_part(&u);
            let pv = positive_part(&v[..n]);
            for i in 0..n {
                prop_assert!(pu[i] <= pv[i]);
            }
        }
    }
}
