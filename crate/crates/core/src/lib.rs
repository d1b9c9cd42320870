//! Geodesic convexity on embedded Riemannian manifolds.
//!
//! The crate works on three closed-form manifolds (Euclidean space, the unit
//! sphere and the hyperboloid model of hyperbolic space) and provides:
//!
//! * [`manifold`]: exp, log, distance, metric and tangent bases;
//! * [`expr`]: the expression language for objectives and constraints,
//!   with finite-difference Riemannian gradients;
//! * [`region`]: sublevel-set regions, membership, interior sampling and
//!   certified metric projection;
//! * [`cone`]: tangent, normal and polar cones and nonnegative least squares;
//! * [`separation`]: quasi-hyperplanes, point/set separation and
//!   supporting planes;
//! * [`kkt`]: projected Riemannian gradient descent with KKT and Fritz-John
//!   certificates;
//! * [`verify`]: the property suite run by `geoconvex verify`.

pub mod cone;
pub mod error;
pub mod expr;
pub mod kkt;
pub mod manifold;
pub mod nnls;
pub mod region;
pub mod sampling;
pub mod separation;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, Expr};
pub use manifold::{dist, exp_map, log_map, ManifoldKind, ManifoldSpec, Point, TangentVector};
pub use region::{ConvexRegion, Membership, ProjectionResult};
