//! Hand-built environments shared by the unit tests of several modules.

use crate::core::{ConstraintBlock, LinearCost};
use crate::environments::Environment;
use crate::geometry::FeasibleSetX;

/// Environment with explicit pieces; the witness is the regularizer minimizer
/// (projection of the origin), matching the engines' start.
pub(crate) fn manual_env(
    costs: Vec<Vec<f64>>,
    constraints: ConstraintBlock,
    domain: FeasibleSetX,
    g_bound: f64,
    f_bound: f64,
) -> Environment {
    let horizon = costs.len();
    let witness = domain.project(&vec![0.0; domain.dim()]).unwrap();
    Environment {
        id: "manual".into(),
        costs: costs.into_iter().map(|c| LinearCost::new(c).unwrap()).collect(),
        constraints,
        domain,
        witness,
        g_bound,
        f_bound,
        horizon,
    }
}

/// `g(x) = -1` for every step: never active, any dimension.
pub(crate) fn inactive_block(p: usize) -> ConstraintBlock {
    ConstraintBlock::Static {
        a: vec![vec![0.0; p]],
        b: vec![1.0],
    }
}
