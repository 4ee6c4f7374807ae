//! Online convex optimization with long-term constraints.
//!
//! The library implements three online engines over a convex feasible set:
//!
//! * `ogd` — projected online gradient descent (ignores the functional
//!   constraints; reference point for speed and solution quality),
//! * `baseline` — virtual-queue mirror descent against a *static* constraint
//!   block, no prediction,
//! * `predictive` — virtual-queue mirror descent with per-step gradient hints
//!   and time-varying constraints.
//!
//! Around the engines sit the pieces needed to *check* the engines' guarantees
//! on concrete runs rather than trust them: seeded environment generators,
//! hint providers with controlled accuracy, an exact queue/violation identity,
//! per-run inequality checkers with explicit inexactness accounting, and a
//! log-log rate fitter for sweeps over the horizon.
//!
//! Engines and predictors are strategy objects behind common traits and are
//! registered by name (see [`algorithms::registry`] and
//! [`predictors::registry`]), so the CLI and config files select them at
//! runtime with plain strings.

pub mod algorithms;
pub mod core;
pub mod environments;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod predictors;
pub mod subproblem;
#[cfg(test)]
pub(crate) mod testutil;
pub mod verify;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
