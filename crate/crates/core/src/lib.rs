//! Numerical Finsler geometry on a single coordinate chart.
//!
//! The crate computes the pointwise tensors of a Finsler metric (fundamental
//! and Cartan tensors, Legendre transform), integrates geodesics and Jacobi
//! fields, evaluates the Chern connection and flag curvature, and builds the
//! submanifold machinery on top: normal cones, shape operators, distance to a
//! submanifold, cut times, focal times and tubular-neighbourhood checks.
//!
//! Module map:
//!
//! * [`metric`]: metrics, tangent vectors, pointwise tensors.
//! * [`ode`]: adaptive Dormand-Prince integrator with Hermite dense output.
//! * [`geodesic`]: spray, geodesics, exponential map, Chern connection,
//!   curvature, Jacobi fields.
//! * [`submanifold`]: immersions, normal cones, second fundamental form,
//!   shape operator.
//! * [`distance`]: point and submanifold distances, grid oracle.
//! * [`calculus`]: gradient and hessian of scalar fields.
//! * [`cut`]: cut times, focal times, cut locus, tubular neighbourhoods.
//! * [`sphere`]: comparison function and the small backward sphere bound.
//! * [`corpus`]: the built-in test metrics and submanifolds.

pub mod calculus;
pub mod corpus;
pub mod cut;
pub mod distance;
pub mod error;
pub mod geodesic;
pub mod linalg;
pub mod metric;
pub mod ode;
pub mod sampling;
pub mod sphere;
pub mod submanifold;

pub use error::{Error, Result};
pub use metric::{Covector, Metric, MetricKind, SymmetricBilinear, TangentVector};

/// Dynamically sized column vector used for points and components.
pub type Vector = nalgebra::DVector<f64>;
/// Dynamically sized matrix.
pub type Matrix = nalgebra::DMatrix<f64>;
