use finsler_core::distance::{
    distance_point, distance_to_submanifold, grid_oracle_distance, point_distance_value, DistanceOptions, GridOracle,
    MethodTag,
};
use finsler_core::{corpus, Metric, Vector};
use proptest::prelude::*;

fn v2(a: f64, b: f64) -> Vector {
    Vector::from_vec(vec![a, b])
}

fn point(r: f64) -> impl Strategy<Value = Vector> {
    (-r..r, -r..r).prop_map(|(a, b)| v2(a, b))
}

/// Great-circle angle between the inverse stereographic images.
fn sphere_oracle(p: &Vector, q: &Vector) -> f64 {
    let lift = |x: &Vector| {
        let s = 1.0 + x.norm_squared();
        [2.0 * x[0] / s, 2.0 * x[1] / s, (x.norm_squared() - 1.0) / s]
    };
    let (a, b) = (lift(p), lift(q));
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let sin = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2)).sqrt();
    let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    sin.atan2(cos)
}

fn hyperbolic_oracle(p: &Vector, q: &Vector) -> f64 {
    (1.0 + 2.0 * (p - q).norm_squared() / ((1.0 - p.norm_squared()) * (1.0 - q.norm_squared()))).acosh()
}

fn shooting(m: &Metric, p: &Vector, q: &Vector) -> f64 {
    point_distance_value(m, p, q, &DistanceOptions::shooting()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shooting_matches_the_sphere_oracle(p in point(0.8), q in point(0.8)) {
        prop_assume!((&p - &q).norm() > 1e-3);
        let m = corpus::sphere_stereographic();
        prop_assert!((shooting(&m, &p, &q) - sphere_oracle(&p, &q)).abs() < 1e-6);
    }

    #[test]
    fn shooting_matches_the_hyperbolic_oracle(p in point(0.55), q in point(0.55)) {
        prop_assume!((&p - &q).norm() > 1e-3);
        let m = corpus::hyperbolic_disk();
        prop_assert!((shooting(&m, &p, &q) - hyperbolic_oracle(&p, &q)).abs() < 1e-6);
    }

    #[test]
    fn closed_forms_satisfy_the_triangle_inequality(k in 0..5usize, p in point(0.6), q in point(0.6), r in point(0.6)) {
        let m = [
            corpus::euclidean_plane(),
            corpus::randers_plane(),
            corpus::sphere_stereographic(),
            corpus::hyperbolic_disk(),
            corpus::quartic_minkowski(),
        ][k].clone();
        let o = DistanceOptions::default();
        let d = |a: &Vector, b: &Vector| point_distance_value(&m, a, b, &o).unwrap();
        prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn shooting_satisfies_the_triangle_inequality(p in point(0.8), q in point(0.8), r in point(0.8)) {
        let m = corpus::custom_randers();
        prop_assert!(shooting(&m, &p, &r) <= shooting(&m, &p, &q) + shooting(&m, &q, &r) + 1e-6);
    }
}

#[test]
fn reverse_metric_swaps_the_endpoints() {
    let cr = corpus::custom_randers();
    let rev = cr.reverse();
    let pairs = [(v2(0.0, 0.0), v2(0.9, 0.2)), (v2(-0.5, 0.4), v2(0.3, -0.6)), (v2(0.7, 0.7), v2(-0.2, 0.1))];
    for (p, q) in pairs {
        let forward = shooting(&cr, &q, &p);
        let backward = shooting(&rev, &p, &q);
        assert!((forward - backward).abs() < 1e-6, "{forward} vs {backward}");
        // Asymmetric: d(p, q) differs from d(q, p).
        assert!((shooting(&cr, &p, &q) - forward).abs() > 1e-4);
    }
}

#[test]
fn closed_form_and_shooting_agree_on_flat_randers() {
    let rd = corpus::randers_plane();
    let (p, q) = (v2(0.1, 0.2), v2(-0.6, 0.9));
    let exact = rd.norm(&p, &(&q - &p));
    let res = distance_point(&rd, &p, &q, &DistanceOptions::default()).unwrap();
    assert_eq!(res.method, MethodTag::ClosedForm);
    assert_eq!(res.value, exact);
    assert!((shooting(&rd, &p, &q) - exact).abs() < 1e-8);
}

#[test]
fn minimizer_reaches_the_target() {
    let sp = corpus::sphere_stereographic();
    let (p, q) = (v2(0.2, -0.1), v2(-0.4, 0.5));
    let res = distance_point(&sp, &p, &q, &DistanceOptions::shooting()).unwrap();
    assert!((res.minimizer.point_at(res.value) - &q).norm() < 1e-7);
    assert_eq!(res.multiplicity, 1);
    for i in 0..=10 {
        let t = res.value * i as f64 / 10.0;
        let speed = sp.norm(&res.minimizer.point_at(t), &res.minimizer.velocity_at(t));
        assert!((speed - 1.0).abs() < 1e-6, "t={t}: {speed}");
    }
}

#[test]
fn submanifold_minimizers_leave_orthogonally() {
    let ell = corpus::ellipse(0.8, 0.5);
    let o = DistanceOptions::default();
    for m in [corpus::randers_plane(), corpus::sphere_stereographic(), corpus::hyperbolic_disk()] {
        for q in [v2(0.1, 0.2), v2(-0.9, 0.3), v2(0.2, -0.05)] {
            let res = distance_to_submanifold(&m, &ell, &q, &o).unwrap();
            assert!(res.residual <= 1e-6, "{} q={q}: {}", m.name(), res.residual);
            let end = res.minimizer.point_at(res.value);
            assert!((end - &q).norm() < 1e-6, "{} q={q}", m.name());
        }
    }
}

#[test]
fn x32_distance_matches_a_dense_scan() {
    let e2 = corpus::euclidean_plane();
    let curve = corpus::x32_curve();
    let o = DistanceOptions::default();
    for q in [v2(0.0, 0.4), v2(0.3, 0.5), v2(-0.5, -0.2), v2(0.9, 1.2)] {
        let n = 400_000;
        let scan = (0..n)
            .map(|i| {
                let u = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                (curve.point(&[u]) - &q).norm()
            })
            .fold(f64::INFINITY, f64::min);
        let d = distance_to_submanifold(&e2, &curve, &q, &o).unwrap().value;
        assert!(d <= scan + 1e-12 && scan - d < 1e-6, "q={q}: {d} vs {scan}");
    }
}

#[test]
fn circle_centre_is_a_degenerate_plateau() {
    let e2 = corpus::euclidean_plane();
    let res = distance_to_submanifold(&e2, &corpus::circle(1.0), &v2(0.0, 0.0), &DistanceOptions::default()).unwrap();
    assert!((res.value - 1.0).abs() < 1e-12);
    assert!(res.degenerate);
}

#[test]
fn grid_oracle_overestimates_within_the_stencil_error() {
    let e2 = corpus::euclidean_plane();
    let sp = corpus::sphere_stereographic();
    let cases = [(&e2, v2(0.0, 0.0), v2(0.8, 0.35), 0.013), (&sp, v2(-0.3, 0.2), v2(0.5, -0.1), 0.03)];
    for (m, p, q, rel) in cases {
        let exact = point_distance_value(m, &p, &q, &DistanceOptions::default()).unwrap();
        let grid = grid_oracle_distance(m, &p, &q, 0.01).unwrap();
        assert!(grid >= exact * (1.0 - 1e-3) && grid <= exact * (1.0 + rel), "{}: {grid} vs {exact}", m.name());
    }
}

#[test]
fn grid_oracle_distances_obey_the_triangle_inequality() {
    let rd = corpus::randers_plane();
    let oracle = GridOracle::new(&rd, [-1.0, -1.0], [1.0, 1.0], 0.02).unwrap();
    let pts = [v2(-0.7, 0.1), v2(0.4, 0.6), v2(0.5, -0.8), v2(0.0, 0.0)];
    let fields: Vec<_> = pts.iter().map(|p| oracle.distances_from(p).unwrap()).collect();
    for (i, fi) in fields.iter().enumerate() {
        for (j, fj) in fields.iter().enumerate() {
            for k in &pts {
                let direct = fi.query(k).unwrap();
                let via = fi.query(&pts[j]).unwrap() + fj.query(k).unwrap();
                // Endpoint attachment adds at most one short segment each way.
                assert!(direct <= via + 0.1, "{i} {j}: {direct} > {via}");
            }
        }
    }
}
