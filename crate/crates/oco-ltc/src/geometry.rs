//! Feasible sets with exact projections, and the regularizer / Bregman
//! divergence the mirror steps are built on.

use rand::Rng;

use crate::core::DecisionVector;
use crate::error::Error;
use crate::linalg;
use crate::Result;

/// A convex feasible set with an exact Euclidean projection.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSetX {
    /// Axis-aligned box `[lower_i, upper_i]` per coordinate.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Euclidean ball of given center and radius.
    Ball { center: Vec<f64>, radius: f64 },
}

impl FeasibleSetX {
    /// Builds a box, rejecting empty, non-finite, or inverted bounds.
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::invalid_input("FeasibleSetX::Box", "bad dimensions"));
        }
        if !linalg::all_finite(&lower) || !linalg::all_finite(&upper) {
            return Err(Error::invalid_input(
                "FeasibleSetX::Box",
                "non-finite bound",
            ));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::invalid_input(
                "FeasibleSetX::Box",
                "lower bound exceeds upper bound",
            ));
        }
        Ok(FeasibleSetX::Box { lower, upper })
    }

    /// The symmetric box `[-half_width, half_width]^p`.
    pub fn centered_box(p: usize, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid_parameter(
                "half_width",
                format!("{half_width}"),
            ));
        }
        FeasibleSetX::new_box(vec![-half_width; p], vec![half_width; p])
    }

    /// Builds a ball, rejecting non-finite centers and nonpositive radii.
    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !linalg::all_finite(&center) {
            return Err(Error::invalid_input("FeasibleSetX::Ball", "bad center"));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid_parameter("radius", format!("{radius}")));
        }
        Ok(FeasibleSetX::Ball { center, radius })
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            FeasibleSetX::Box { lower, .. } => lower.len(),
            FeasibleSetX::Ball { center, .. } => center.len(),
        }
    }

    /// Euclidean diameter of the set.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSetX::Box { lower, upper } => linalg::dist2_sq(upper, lower).sqrt(),
            FeasibleSetX::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Exact Euclidean projection: componentwise clamp for boxes, radial
    /// rescale for balls.
    pub fn project(&self, y: &[f64]) -> Result<DecisionVector> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "FeasibleSetX::project",
                expected: self.dim(),
                got: y.len(),
            });
        }
        let coords = match self {
            FeasibleSetX::Box { lower, upper } => y
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            FeasibleSetX::Ball { center, radius } => {
                let d = linalg::sub(y, center);
                let n = linalg::norm2(&d);
                if n <= *radius {
                    y.to_vec()
                } else {
                    linalg::axpy(center, radius / n, &d)
                }
            }
        };
        DecisionVector::new(coords)
    }

    /// Membership up to `tol` in the natural metric of each representation.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            FeasibleSetX::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            FeasibleSetX::Ball { center, radius } => {
                linalg::dist2_sq(x, center).sqrt() <= radius + tol
            }
        }
    }

    /// Exact supremum of the affine map `x -> <a, x> - b` over the set.
    pub fn sup_affine(&self, a: &[f64], b: f64) -> Result<f64> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "FeasibleSetX::sup_affine",
                expected: self.dim(),
                got: a.len(),
            });
        }
        let sup = match self {
            FeasibleSetX::Box { lower, upper } => a
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(ai, (l, u))| (ai * l).max(ai * u))
                .sum::<f64>(),
            FeasibleSetX::Ball { center, radius } => {
                linalg::dot(a, center) + radius * linalg::norm2(a)
            }
        };
        Ok(sup - b)
    }

    /// Exact supremum of `|<a, x>|` over the set.
    pub fn sup_abs_linear(&self, a: &[f64]) -> Result<f64> {
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        Ok(self.sup_affine(a, 0.0)?.max(self.sup_affine(&neg, 0.0)?))
    }

    /// The smallest axis-aligned box containing the set, as
    /// `(lower, upper)` corner vectors.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            FeasibleSetX::Box { lower, upper } => (lower.clone(), upper.clone()),
            FeasibleSetX::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
        }
    }

    /// A uniformly seeded point of the set (used by sampling-based tests and
    /// the comparator cross-checks; boxes sample coordinates independently,
    /// balls sample by rejection from the bounding box).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DecisionVector {
        match self {
            FeasibleSetX::Box { lower, upper } => {
                let coords = lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| {
                        if l == u {
                            *l
                        } else {
                            rng.gen_range(*l..*u)
                        }
                    })
                    .collect();
                DecisionVector::new(coords).expect("box sample is finite")
            }
            FeasibleSetX::Ball { center, radius } => loop {
                let cand: Vec<f64> = center
                    .iter()
                    .map(|c| rng.gen_range(c - radius..c + radius))
                    .collect();
                if linalg::dist2_sq(&cand, center).sqrt() <= *radius {
                    return DecisionVector::new(cand).expect("ball sample is finite");
                }
            },
        }
    }
}

/// The mirror map. Only the quadratic choice is provided; everything the
/// engines need from it (gradient steps, Bregman divergences, exact argmins
/// over boxes and balls) is closed-form there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regularizer {
    /// `R(x) = 1/2 ||x||^2`.
    #[default]
    Quadratic,
}

impl Regularizer {
    /// `R(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Regularizer::Quadratic => 0.5 * linalg::dot(x, x),
        }
    }

    /// Bregman divergence `D_R(x, y)`; `1/2 ||x - y||^2` for the quadratic map.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "Regularizer::bregman",
                expected: y.len(),
                got: x.len(),
            });
        }
        match self {
            Regularizer::Quadratic => Ok(0.5 * linalg::dist2_sq(x, y)),
        }
    }
}

/// `argmin_{x in X} R(x)`; for the quadratic map this is the projection of the
/// origin onto the set.
pub fn regularizer_minimizer(reg: Regularizer, set: &FeasibleSetX) -> Result<DecisionVector> {
    match reg {
        Regularizer::Quadratic => set.project(&vec![0.0; set.dim()]),
    }
}
