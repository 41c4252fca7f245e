use finsler_core::{corpus, Metric, TangentVector, Vector};
use proptest::prelude::*;

fn metrics() -> Vec<Metric> {
    vec![
        corpus::euclidean_plane(),
        corpus::randers_plane(),
        corpus::sphere_stereographic(),
        corpus::hyperbolic_disk(),
        corpus::quartic_minkowski(),
        corpus::custom_randers(),
    ]
}

/// `(metric index, point, vector)` with the point inside every chart.
fn sample() -> impl Strategy<Value = (usize, Vector, Vector)> {
    (0..6usize, -0.6..0.6f64, -0.6..0.6f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero vector", |(_, _, _, a, b)| a.hypot(*b) > 0.05)
        .prop_map(|(k, x, y, a, b)| (k, Vector::from_vec(vec![x, y]), Vector::from_vec(vec![a, b])))
}

fn vec2() -> impl Strategy<Value = Vector> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Vector::from_vec(vec![a, b]))
}

fn fd_tol(m: &Metric, analytic: f64, fd: f64) -> f64 {
    if m.is_analytic() { analytic } else { fd }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn norm_is_positively_homogeneous((k, p, v) in sample(), lambda in 0.01..50.0f64) {
        let m = &metrics()[k];
        let f = m.norm(&p, &v);
        prop_assert!((m.norm(&p, &(&v * lambda)) - lambda * f).abs() <= 1e-10 * lambda * f);
    }

    #[test]
    fn fundamental_tensor_reproduces_the_norm((k, p, v) in sample()) {
        let m = &metrics()[k];
        let g = m.fundamental(&p, &v);
        let f = m.norm(&p, &v);
        prop_assert!((v.dot(&(&g * &v)) - f * f).abs() <= fd_tol(m, 1e-9, 1e-6));
        prop_assert!((&g - g.transpose()).amax() == 0.0);
        prop_assert!(g.clone().cholesky().is_some(), "g must be positive definite");
    }

    #[test]
    fn cartan_tensor_is_symmetric_and_vanishes_along_v((k, p, v) in sample(), u in vec2(), w in vec2()) {
        let m = &metrics()[k];
        let c = m.cartan(&p, &v);
        let scale = u.norm() * w.norm();
        prop_assert!(c.contract(&v, &u, &w).abs() <= fd_tol(m, 1e-9, 1e-6) * scale.max(1e-12));
        let base = c.contract(&u, &w, &v);
        for other in [c.contract(&w, &u, &v), c.contract(&v, &w, &u), c.contract(&u, &v, &w)] {
            prop_assert!((other - base).abs() <= 1e-8);
        }
        if m.is_riemannian() {
            prop_assert_eq!(c.max_abs(), 0.0);
        }
    }

    #[test]
    fn legendre_transform_roundtrips((k, p, v) in sample()) {
        let m = &metrics()[k];
        let tv = TangentVector::new(p, v.clone());
        let xi = m.legendre(&tv).unwrap();
        // L(v)(v) = F(v)^2.
        let f = m.norm(&tv.point, &v);
        prop_assert!((xi.apply(&v) - f * f).abs() <= fd_tol(m, 1e-10, 1e-6));
        let back = m.legendre_inverse(&xi).unwrap();
        prop_assert!((back.components - &v).norm() <= fd_tol(m, 1e-8, 1e-6) * v.norm());
    }

    #[test]
    fn reverse_metric_relations((k, p, v) in sample(), u in vec2(), w in vec2(), z in vec2()) {
        let m = &metrics()[k];
        let rev = m.reverse();
        let minus = -&v;
        prop_assert!((rev.norm(&p, &v) - m.norm(&p, &minus)).abs() <= 1e-12);
        prop_assert!((rev.fundamental(&p, &v) - m.fundamental(&p, &minus)).amax() <= 1e-9);
        let crev = rev.cartan(&p, &v).contract(&u, &w, &z);
        let cm = m.cartan(&p, &minus).contract(&u, &w, &z);
        prop_assert!((crev + cm).abs() <= 1e-9);
        prop_assert!(rev.reverse().norm(&p, &v) == m.norm(&p, &v));
    }
}

#[test]
fn zero_vector_is_rejected() {
    let m = corpus::randers_plane();
    let zero = TangentVector::from_slices(&[0.0, 0.0], &[0.0, 0.0]);
    assert_eq!(m.fundamental_tensor(&zero).unwrap_err(), finsler_core::Error::ZeroVector);
}

#[test]
fn randers_asymmetry_is_visible_in_the_norm() {
    let m = corpus::randers_plane();
    let p = Vector::zeros(2);
    assert_eq!(m.norm(&p, &Vector::from_vec(vec![1.0, 0.0])), 1.5);
    assert_eq!(m.norm(&p, &Vector::from_vec(vec![-1.0, 0.0])), 0.5);
}

#[test]
fn finite_difference_path_matches_analytic_tensors() {
    let p = Vector::from_vec(vec![0.3, -0.2]);
    let v = Vector::from_vec(vec![0.7, 0.4]);
    for m in [corpus::randers_plane(), corpus::sphere_stereographic(), corpus::quartic_minkowski()] {
        let fd = corpus::as_custom(&m);
        assert!((fd.fundamental(&p, &v) - m.fundamental(&p, &v)).amax() < 1e-7, "{}", m.name());
        assert!(fd.cartan(&p, &v).sub(&m.cartan(&p, &v)).max_abs() < 1e-4, "{}", m.name());
    }
}
