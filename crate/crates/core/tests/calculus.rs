use finsler_core::calculus::{gradient, hessian, hessian_by_gradient, level_set_shape, ScalarField};
use finsler_core::distance::DistanceOptions;
use finsler_core::geodesic::chern;
use finsler_core::{corpus, Matrix, Metric, Vector};
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
    ]
}

/// `f(x) = c0 x + c1 y + c2 x^2 + c3 xy + c4 y^2 + sin(x - y) / 4` with its
/// exact differential.
fn field(c: [f64; 5]) -> ScalarField {
    ScalarField::new(move |p: &Vector| {
        let (x, y) = (p[0], p[1]);
        c[0] * x + c[1] * y + c[2] * x * x + c[3] * x * y + c[4] * y * y + 0.25 * (x - y).sin()
    })
    .with_differential(move |p: &Vector| {
        let (x, y) = (p[0], p[1]);
        let s = 0.25 * (x - y).cos();
        v2(c[0] + 2.0 * c[2] * x + c[3] * y + s, c[1] + c[3] * x + 2.0 * c[4] * y - s)
    })
}

fn coeffs() -> impl Strategy<Value = [f64; 5]> {
    (0.5..1.5f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c, d, e)| [a, b, c, d, e])
}

fn point() -> impl Strategy<Value = Vector> {
    (-0.3..0.3f64, -0.3..0.3f64).prop_map(|(a, b)| v2(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gradient_represents_the_differential(k in 0..5usize, c in coeffs(), p in point(), a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let m = &metrics()[k];
        let f = field(c);
        let df = f.differential(&p).unwrap();
        prop_assume!(df.norm() > 0.1);
        let grad = gradient(m, &f, &p).unwrap().components;
        let g = m.fundamental(&p, &grad);
        let x = v2(a, b);
        prop_assert!((df.dot(&x) - grad.dot(&(&g * &x))).abs() < 1e-9);
        let fg = m.norm(&p, &grad);
        prop_assert!((df.dot(&grad) - fg * fg).abs() < 1e-9);
    }

    #[test]
    fn hessian_is_symmetric_and_both_formulas_agree(k in 0..5usize, c in coeffs(), p in point()) {
        let m = &metrics()[k];
        let f = field(c);
        prop_assume!(f.differential(&p).unwrap().norm() > 0.1);
        let h1 = hessian(m, &f, &p).unwrap().matrix;
        let h2 = hessian_by_gradient(m, &f, &p).unwrap().matrix;
        prop_assert!((&h1 - h1.transpose()).amax() < 1e-8);
        prop_assert!((&h1 - &h2).amax() < 1e-5, "{} vs {}", h1, h2);
    }

    #[test]
    fn hessian_does_not_depend_on_the_extension(
        k in 0..5usize, c in coeffs(), p in point(),
        a in -1.0..1.0f64, b in -1.0..1.0f64, bm in proptest::array::uniform4(-2.0..2.0f64),
    ) {
        let m = &metrics()[k];
        let f = field(c);
        prop_assume!(f.differential(&p).unwrap().norm() > 0.1);
        let (x, y0) = (v2(a, b), v2(0.6, -0.8));
        // Y(q) = y0 + B (q - p), a non-constant extension of y0.
        let bmat = Matrix::from_row_slice(2, 2, &bm);
        let yf = |q: &Vector| &y0 + &bmat * (q - &p);
        let s = 1e-5;
        let yfq = |q: &Vector| yf(q).dot(&f.differential(q).unwrap());
        let xy_f = (yfq(&(&p + &x * s)) - yfq(&(&p - &x * s))) / (2.0 * s);
        let grad = gradient(m, &f, &p).unwrap().components;
        let gamma = chern(m, &p, &grad);
        let nabla_xy = &bmat * &x + gamma.apply_lower(&x, &y0);
        let oracle = xy_f - f.differential(&p).unwrap().dot(&nabla_xy);
        let h = hessian(m, &f, &p).unwrap().apply(&x, &y0);
        prop_assert!((h - oracle).abs() < 1e-6, "{} vs {}", h, oracle);
    }
}

#[test]
fn euclidean_distance_hessian_is_the_tangential_projection() {
    let e2 = corpus::euclidean_plane();
    let f = ScalarField::distance_from_point(&e2, &v2(0.0, 0.0), DistanceOptions::default());
    for (r, th) in [(0.5, 0.3), (1.0, 1.2), (2.0, -2.0)] {
        let p = v2(r * f64::cos(th), r * f64::sin(th));
        let h = hessian(&e2, &f, &p).unwrap();
        let radial = v2(th.cos(), th.sin());
        let tangential = v2(-th.sin(), th.cos());
        assert!((h.apply(&tangential, &tangential) - 1.0 / r).abs() < 1e-5);
        assert!(h.apply(&radial, &radial).abs() < 1e-5);
        assert!(h.apply(&radial, &tangential).abs() < 1e-5);
    }
}

#[test]
fn level_sets_of_the_radius_are_circles_with_outward_normal() {
    let e2 = corpus::euclidean_plane();
    let f = ScalarField::new(|p: &Vector| p.norm()).with_differential(|p: &Vector| p / p.norm());
    for r in [0.5, 1.0, 3.0] {
        let shape = level_set_shape(&e2, &f, &v2(0.0, r)).unwrap();
        let k = shape.eigenvalues()[0];
        assert!((k + 1.0 / r).abs() < 1e-8, "r={r}: {k}");
    }
}

#[test]
fn critical_points_are_rejected() {
    let e2 = corpus::euclidean_plane();
    let f = ScalarField::new(|p: &Vector| p.norm_squared()).with_differential(|p: &Vector| p * 2.0);
    assert!(gradient(&e2, &f, &v2(0.0, 0.0)).is_err());
}
