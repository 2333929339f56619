//! Numerical laboratory for slow-fast vector fields on the flat 2-torus.
//!
//! Models are skew products `x' = f(x, y)`, `y' = eps * g(x, y)` whose
//! critical set `{f = 0}` is a link of torus knots. The crate extracts the
//! critical curves, evaluates slow divergence integrals along them, detects
//! the limit cycles that bifurcate for small `eps > 0`, and classifies them
//! (stability, canard flag, knot type, rotation number).
//!
//! Module map:
//!
//! - [`torus`]: wrapping, lifts, flat metric, winding pairs, Hausdorff distance.
//! - [`models`]: model families, critical curves, contact points, assumption checks.
//! - [`sdi`]: slow divergence integrals.
//! - [`integrate`]: adaptive Dormand–Prince integration with divergence accumulation.
//! - [`cycles`]: limit-cycle detection, censuses, convergence checks, basins.
//! - [`knots`]: exact torus-knot classification.

pub mod cycles;
pub mod error;
pub mod integrate;
pub mod knots;
pub mod models;
pub mod quadrature;
pub mod scalar;
pub mod sdi;
pub mod torus;

pub use error::{Error, Result};
