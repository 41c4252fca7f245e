use finsler_core::geodesic::{
    accurate_options, chern, curvature, exp_map, flag_curvature, geodesic, jacobi_field, n_jacobi_field, spray,
    variational_frame,
};
use finsler_core::ode::{OdeOptions, Termination};
use finsler_core::submanifold::{hypersurface_normal, CoOrientation};
use finsler_core::{corpus, Matrix, Metric, TangentVector, Vector};
use proptest::prelude::*;

fn v2(a: f64, b: f64) -> Vector {
    Vector::from_vec(vec![a, b])
}

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

fn sample() -> impl Strategy<Value = (usize, Vector, Vector)> {
    (0..6usize, -0.5..0.5f64, -0.5..0.5f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter("nonzero vector", |(_, _, _, a, b)| a.hypot(*b) > 0.1)
        .prop_map(|(k, x, y, a, b)| (k, v2(x, y), v2(a, b)))
}

/// Central difference of the geodesic family `s -> gamma(x0, y0 + s w)` at `t`.
fn variation(m: &Metric, x0: &Vector, y0: &Vector, w: &Vector, t: f64) -> Vector {
    let h = 1e-5;
    let opts = accurate_options(m);
    let plus = geodesic(m, x0, &(y0 + w * h), t, &opts);
    let minus = geodesic(m, x0, &(y0 - w * h), t, &opts);
    (plus.point_at(t) - minus.point_at(t)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spray_is_two_homogeneous((k, p, v) in sample(), lambda in prop_oneof![Just(0.5), Just(2.0), 0.1..10.0f64]) {
        let m = &metrics()[k];
        let g = spray(m, &p, &v);
        let scaled = spray(m, &p, &(&v * lambda));
        prop_assert!((scaled - &g * (lambda * lambda)).norm() <= 1e-8 * lambda * lambda * (1.0 + g.norm()));
    }

    #[test]
    fn chern_connection_is_almost_metric_compatible((k, p, v) in sample(), bm in proptest::array::uniform4(-1.0..1.0f64)) {
        // d_k g_ij(x, V(x)) = Gamma^l_ki g_lj + Gamma^l_kj g_il + 2 C_ijl (nabla_k V)^l
        // for the field V(x) = v + B (x - p).
        let m = &metrics()[k];
        let b = Matrix::from_row_slice(2, 2, &bm);
        let field = |x: &Vector| &v + &b * (x - &p);
        let g = m.fundamental(&p, &v);
        let c = m.cartan(&p, &v);
        let gamma = chern(m, &p, &v);
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for kk in 0..2 {
            let mut e = Vector::zeros(2);
            e[kk] = 1.0;
            let (xp, xm) = (&p + &e * h, &p - &e * h);
            let lhs = (m.fundamental(&xp, &field(&xp)) - m.fundamental(&xm, &field(&xm))) / (2.0 * h);
            let nabla_v = b.column(kk).into_owned() + gamma.apply_lower(&e, &v);
            for i in 0..2 {
                for j in 0..2 {
                    let mut rhs = 0.0;
                    for l in 0..2 {
                        rhs += gamma.get(l, kk, i) * g[(l, j)] + gamma.get(l, kk, j) * g[(i, l)] + 2.0 * c.get(i, j, l) * nabla_v[l];
                    }
                    worst = worst.max((lhs[(i, j)] - rhs).abs());
                }
            }
        }
        prop_assert!(worst <= 1e-5, "residual {}", worst);
    }

    #[test]
    fn chern_connection_is_torsion_free((k, p, v) in sample(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let m = &metrics()[k];
        let gamma = chern(m, &p, &v);
        let (x, y) = (v2(1.0, 0.3), v2(a, b));
        prop_assert!((gamma.apply_lower(&x, &y) - gamma.apply_lower(&y, &x)).norm() <= 1e-12);
    }

    #[test]
    fn curvature_is_antisymmetric_in_the_first_pair((k, p, v) in sample(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let m = &metrics()[k];
        let (x, y, z) = (v2(a, b), v2(0.4, -0.9), v2(-0.2, 0.7));
        let r1 = curvature(m, &p, &v, &x, &y, &z);
        let r2 = curvature(m, &p, &v, &y, &x, &z);
        prop_assert!((&r1 + &r2).norm() <= 1e-9 * (1.0 + r1.norm()));
    }

    #[test]
    fn speed_is_conserved_along_geodesics((k, p, v) in sample()) {
        let m = &metrics()[k];
        let rec = geodesic(m, &p, &v, 2.0, &accurate_options(m));
        let tol = if m.is_analytic() { 1e-8 } else { 1e-6 };
        prop_assert!(rec.speed_drift(m) <= tol, "drift {}", rec.speed_drift(m));
    }
}

#[test]
fn flat_exponential_maps_are_affine() {
    for m in [corpus::euclidean_plane(), corpus::randers_plane(), corpus::quartic_minkowski()] {
        let v = TangentVector::from_slices(&[0.2, -0.1], &[0.7, 0.5]);
        let q = exp_map(&m, &v).unwrap();
        assert!((q - v2(0.9, 0.4)).norm() < 1e-10, "{}", m.name());
    }
}

#[test]
fn zero_vector_exponential_is_the_base_point() {
    let m = corpus::sphere_stereographic();
    let v = TangentVector::from_slices(&[0.3, 0.1], &[0.0, 0.0]);
    assert_eq!(exp_map(&m, &v).unwrap(), v2(0.3, 0.1));
}

#[test]
fn hyperbolic_geodesics_leave_the_disk_chart_early() {
    let m = corpus::hyperbolic_disk();
    let rec = geodesic(&m, &v2(0.0, 0.0), &v2(1.0, 0.0), 50.0, &OdeOptions::default());
    assert_eq!(rec.terminated_by, Termination::ChartExit);
    assert!(rec.t_end() < 50.0);
}

#[test]
fn constant_curvature_models() {
    let cases = [(corpus::sphere_stereographic(), 1.0), (corpus::hyperbolic_disk(), -1.0)];
    for (m, k) in cases {
        for (p, v, w) in [
            ([0.0, 0.0], [1.0, 0.0], [0.0, 1.0]),
            ([0.3, -0.2], [0.5, 0.8], [-0.3, 0.1]),
            ([-0.4, 0.1], [0.2, -0.6], [1.0, 1.0]),
        ] {
            let kappa = flag_curvature(&m, &TangentVector::from_slices(&p, &v), &Vector::from_row_slice(&w)).unwrap();
            assert!((kappa - k).abs() < 1e-3, "{} {kappa}", m.name());
        }
    }
}

#[test]
fn flat_metrics_have_zero_flag_curvature() {
    for m in [corpus::euclidean_plane(), corpus::randers_plane(), corpus::quartic_minkowski()] {
        let kappa = flag_curvature(&m, &TangentVector::from_slices(&[0.1, 0.2], &[0.6, -0.3]), &v2(0.2, 0.9)).unwrap();
        assert!(kappa.abs() < 1e-6, "{} {kappa}", m.name());
    }
}

#[test]
fn jacobi_fields_match_geodesic_variations() {
    let x0 = v2(0.1, -0.1);
    let y0 = v2(0.6, 0.3);
    let w = v2(-0.3, 0.5);
    for m in [corpus::sphere_stereographic(), corpus::hyperbolic_disk(), corpus::custom_randers()] {
        let opts = accurate_options(&m);
        // With J(0) = 0 the coordinate rate and DJ(0) coincide.
        let rec = jacobi_field(&m, &TangentVector::new(x0.clone(), y0.clone()), 2.0, &Vector::zeros(2), &w, &opts).unwrap();
        let frame = variational_frame(&m, &x0, &y0, &[Vector::zeros(2)], &[w.clone()], 2.0, &opts);
        for t in [0.25, 0.5, 1.0, 1.5, 2.0] {
            let oracle = variation(&m, &x0, &y0, &w, t);
            let curvature_form = rec.j_at(t);
            let linearized = &frame.fields_at(t)[0];
            assert!((&curvature_form - &oracle).norm() < 1e-4, "{} t={t} {curvature_form} {oracle}", m.name());
            assert!((linearized - &oracle).norm() < 1e-4, "{} t={t}", m.name());
        }
    }
}

#[test]
fn equator_jacobi_fields_vanish_at_the_pole() {
    let sp = corpus::sphere_stereographic();
    let equator = corpus::equator();
    for u in [0.0, 1.3, -2.4] {
        let n = hypersurface_normal(&sp, &equator, &[u], CoOrientation::Positive).unwrap();
        let j0 = equator.tangent_frame(&[u]).column(0).into_owned();
        let rec = n_jacobi_field(&sp, &equator, &n, &j0, 2.0, &accurate_options(&sp)).unwrap();
        for t in [0.3, 0.8, 1.2, std::f64::consts::FRAC_PI_2, 1.9] {
            let x = rec.along.point_at(t);
            let norm = sp.norm(&x, &rec.j_at(t));
            assert!((norm - t.cos().abs()).abs() < 1e-6, "u={u} t={t}: {norm}");
        }
    }
}
