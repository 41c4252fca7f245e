//! Built-in test metrics and submanifolds.
//!
//! | name | metric |
//! |------|--------|
//! | `E2` | Euclidean plane |
//! | `RD` | Randers plane `F = |v| + 0.5 v_1` |
//! | `SP` | unit sphere in the stereographic chart, `F = 2|v| / (1 + |p|^2)` |
//! | `HY` | Poincare disk, `F = 2|v| / (1 - |p|^2)`, chart radius 0.99 |
//! | `MK` | quartic Minkowski norm `((v.v)^2 + 0.5 sum v_i^4)^(1/4)` |
//! | `CR` | position-dependent Randers-type metric, finite-difference path |

use std::sync::Arc;

use crate::metric::{ChartDomain, ConformalFactor, Metric, MetricKind};
use crate::submanifold::{Ellipse, Line, PointSet, Submanifold, X32Curve};
use crate::{Matrix, Vector};

/// Half-width of the stereographic chart box. Geodesics heading for the
/// north pole leave the box about `2 / SPHERE_CHART_HALF_WIDTH` before it.
pub const SPHERE_CHART_HALF_WIDTH: f64 = 1e4;
pub const HYPERBOLIC_CHART_RADIUS: f64 = 0.99;

pub fn euclidean_plane() -> Metric {
    Metric::new("E2", 2, MetricKind::Conformal(ConformalFactor::Constant(1.0)), ChartDomain::Unbounded)
        .expect("valid metric")
}

pub fn randers_plane() -> Metric {
    Metric::new(
        "RD",
        2,
        MetricKind::Randers { a: Matrix::identity(2, 2), b: Vector::from_vec(vec![0.5, 0.0]) },
        ChartDomain::Unbounded,
    )
    .expect("valid metric")
}

pub fn sphere_stereographic() -> Metric {
    let w = SPHERE_CHART_HALF_WIDTH;
    Metric::new(
        "SP",
        2,
        MetricKind::Conformal(ConformalFactor::Sphere),
        ChartDomain::Box { lo: vec![-w, -w], hi: vec![w, w] },
    )
    .expect("valid metric")
}

pub fn hyperbolic_disk() -> Metric {
    Metric::new(
        "HY",
        2,
        MetricKind::Conformal(ConformalFactor::Hyperbolic),
        ChartDomain::Ball { center: vec![0.0, 0.0], radius: HYPERBOLIC_CHART_RADIUS },
    )
    .expect("valid metric")
}

pub fn quartic_minkowski() -> Metric {
    Metric::new("MK", 2, MetricKind::Minkowski { c: 0.5 }, ChartDomain::Unbounded).expect("valid metric")
}

/// `F = (1 + 0.1 |x|^2) |y| + 0.3 (cos x_2 y_1 + sin x_1 y_2) / sqrt(2)` on
/// the box `[-2, 2]^2`, evaluated only through finite differences.
pub fn custom_randers() -> Metric {
    let f = |x: &[f64], y: &[f64]| {
        let phi = 1.0 + 0.1 * (x[0] * x[0] + x[1] * x[1]);
        let beta = 0.3 / std::f64::consts::SQRT_2 * (x[1].cos() * y[0] + x[0].sin() * y[1]);
        phi * (y[0] * y[0] + y[1] * y[1]).sqrt() + beta
    };
    Metric::new(
        "CR",
        2,
        MetricKind::Custom { f: Arc::new(f) },
        ChartDomain::Box { lo: vec![-2.0, -2.0], hi: vec![2.0, 2.0] },
    )
    .expect("valid metric")
}

/// The same `F` as `m`, but with every derivative taken by finite differences.
pub fn as_custom(m: &Metric) -> Metric {
    let inner = m.clone();
    let f = move |x: &[f64], y: &[f64]| inner.norm(&Vector::from_column_slice(x), &Vector::from_column_slice(y));
    Metric::new(format!("{} (finite differences)", m.name()), m.dim(), MetricKind::Custom { f: Arc::new(f) }, m.domain().clone())
        .expect("valid metric")
}

/// Built-in metric by short name.
pub fn metric_by_name(name: &str) -> Option<Metric> {
    match name {
        "E2" | "e2" => Some(euclidean_plane()),
        "RD" | "rd" => Some(randers_plane()),
        "SP" | "sp" => Some(sphere_stereographic()),
        "HY" | "hy" => Some(hyperbolic_disk()),
        "MK" | "mk" => Some(quartic_minkowski()),
        "CR" | "cr" => Some(custom_randers()),
        _ => None,
    }
}

pub fn circle(radius: f64) -> Submanifold {
    Submanifold::new(format!("circle(r={radius})"), Ellipse { center: [0.0, 0.0], a: radius, b: radius })
}

pub fn ellipse(a: f64, b: f64) -> Submanifold {
    Submanifold::new(format!("ellipse({a},{b})"), Ellipse { center: [0.0, 0.0], a, b })
}

/// The unit circle, which is the equator in the stereographic chart of `SP`.
pub fn equator() -> Submanifold {
    Submanifold::new("equator", Ellipse { center: [0.0, 0.0], a: 1.0, b: 1.0 })
}

pub fn x_axis() -> Submanifold {
    Submanifold::new("x-axis", Line { origin: vec![0.0, 0.0], direction: vec![1.0, 0.0], range: (-50.0, 50.0) })
}

pub fn x32_curve() -> Submanifold {
    Submanifold::new("x32_curve", X32Curve)
}

pub fn point(p: &[f64]) -> Submanifold {
    Submanifold::new(format!("point{p:?}"), PointSet { point: p.to_vec() })
}
