use std::f64::consts::PI;

use finsler_core::submanifold::{
    hypersurface_normal, normal_cone_sample, normal_residual, principal_curvatures, shape_operator,
    shape_operator_by_extension, CoOrientation, Immersion, Submanifold,
};
use finsler_core::{corpus, Matrix, Metric, Vector};
use proptest::prelude::*;

/// Ellipse `(a cos phi(u), b sin phi(u))` with `phi(u) = u + eps sin(u + phase)`.
struct WarpedEllipse {
    a: f64,
    b: f64,
    eps: f64,
    phase: f64,
}

impl WarpedEllipse {
    fn warp(&self, u: f64) -> f64 {
        u + self.eps * (u + self.phase).sin()
    }
}

impl Immersion for WarpedEllipse {
    fn ambient_dim(&self) -> usize {
        2
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-PI], vec![PI])
    }
    fn periodic(&self) -> Vec<bool> {
        vec![true]
    }
    fn point(&self, u: &[f64]) -> Vector {
        let s = self.warp(u[0]);
        Vector::from_vec(vec![self.a * s.cos(), self.b * s.sin()])
    }
}

fn metrics() -> Vec<Metric> {
    vec![
        corpus::euclidean_plane(),
        corpus::randers_plane(),
        corpus::sphere_stereographic(),
        corpus::hyperbolic_disk(),
        corpus::quartic_minkowski(),
    ]
}

fn side(positive: bool) -> CoOrientation {
    if positive { CoOrientation::Positive } else { CoOrientation::Negative }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shape_operator_ignores_the_parametrization(
        k in 0..5usize, u in -PI..PI, positive in any::<bool>(), eps in -0.6..0.6f64, phase in -PI..PI,
    ) {
        let m = &metrics()[k];
        let plain = corpus::ellipse(0.8, 0.5);
        let w = WarpedEllipse { a: 0.8, b: 0.5, eps, phase };
        let s = w.warp(u);
        let warped = Submanifold::new("warped", w);
        let n1 = hypersurface_normal(m, &plain, &[s], side(positive)).unwrap();
        let n2 = hypersurface_normal(m, &warped, &[u], side(positive)).unwrap();
        prop_assert!((n1.direction() - n2.direction()).norm() < 1e-7);
        let k1 = principal_curvatures(m, &plain, &n1).unwrap().values[0];
        let k2 = principal_curvatures(m, &warped, &n2).unwrap().values[0];
        prop_assert!((k1 - k2).abs() < 1e-6 * (1.0 + k1.abs()), "{} vs {}", k1, k2);
    }

    #[test]
    fn normals_are_unit_and_annihilate_the_tangent(k in 0..5usize, u in -PI..PI, positive in any::<bool>()) {
        let m = &metrics()[k];
        let ell = corpus::ellipse(0.8, 0.5);
        let n = hypersurface_normal(m, &ell, &[u], side(positive)).unwrap();
        prop_assert!((m.norm(n.point(), n.direction()) - 1.0).abs() < 1e-10);
        prop_assert!(normal_residual(m, &ell, &n) < 1e-8);
    }

    #[test]
    fn reverse_metric_negates_the_shape_operator(k in 0..5usize, u in -PI..PI) {
        let m = &metrics()[k];
        let rev = m.reverse();
        let ell = corpus::ellipse(0.8, 0.5);
        let n = hypersurface_normal(m, &ell, &[u], CoOrientation::Positive).unwrap();
        let nbar = hypersurface_normal(&rev, &ell, &[u], CoOrientation::Negative).unwrap();
        prop_assert!((nbar.direction() + n.direction()).norm() < 1e-9);
        let a = shape_operator(m, &ell, &n).unwrap().matrix[(0, 0)];
        let abar = shape_operator(&rev, &ell, &nbar).unwrap().matrix[(0, 0)];
        prop_assert!((a + abar).abs() < 1e-8 * (1.0 + a.abs()));
    }

    #[test]
    fn the_two_shape_constructions_agree(k in 0..5usize, u in -PI..PI, positive in any::<bool>()) {
        let m = &metrics()[k];
        let ell = corpus::ellipse(0.8, 0.5);
        let n = hypersurface_normal(m, &ell, &[u], side(positive)).unwrap();
        let a = shape_operator(m, &ell, &n).unwrap().matrix[(0, 0)];
        let b = shape_operator_by_extension(m, &ell, &n).unwrap().matrix[(0, 0)];
        prop_assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{} vs {}", a, b);
    }
}

#[test]
fn euclidean_ellipse_curvature_matches_the_formula() {
    let e2 = corpus::euclidean_plane();
    let (a, b) = (2.0, 1.0);
    let ell = corpus::ellipse(a, b);
    let inward = ell.inward().unwrap();
    for i in 0..24 {
        let u = -PI + 2.0 * PI * i as f64 / 24.0;
        let n = hypersurface_normal(&e2, &ell, &[u], inward).unwrap();
        let oracle = a * b / (a * a * u.sin().powi(2) + b * b * u.cos().powi(2)).powf(1.5);
        let k = principal_curvatures(&e2, &ell, &n).unwrap().values[0];
        assert!((k - oracle).abs() < 1e-8, "u={u}: {k} vs {oracle}");
    }
}

#[test]
fn point_normal_cone_is_the_unit_indicatrix() {
    let rd = corpus::randers_plane();
    let pt = corpus::point(&[0.2, -0.3]);
    let cone = normal_cone_sample(&rd, &pt, &[], 32).unwrap();
    assert_eq!(cone.len(), 32);
    for n in &cone {
        assert!((rd.norm(n.point(), n.direction()) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hypersurface_shape_operator_is_self_adjoint() {
    let sp = corpus::sphere_stereographic();
    let ell = corpus::ellipse(0.6, 0.4);
    let n = hypersurface_normal(&sp, &ell, &[1.1], CoOrientation::Positive).unwrap();
    let shape = shape_operator(&sp, &ell, &n).unwrap();
    assert!(shape.self_adjointness_residual() < 1e-12);
    let frame: &Matrix = &shape.frame;
    let t = frame.column(0).into_owned();
    assert!((shape.apply(&t).unwrap() - &t * shape.matrix[(0, 0)]).norm() < 1e-12);
}
