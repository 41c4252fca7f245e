//! Verification suites. Each suite returns numeric checks that carry their
//! tolerance and margin; the acceptance criteria are groups of these checks.

use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use finsler_core::calculus::{hessian, level_set_shape, ScalarField};
use finsler_core::cut::{
    cut_locus_sample, interior_radius_study, separating_points, singleton_intersection_check, tubular_verify,
    CutLocusCloud, CutOptions,
};
use finsler_core::distance::{distance_point, DistanceOptions, GridOracle};
use finsler_core::geodesic::{accurate_options, exp_map, flag_curvature, geodesic, jacobi_field, spray};
use finsler_core::sphere::backward_sphere_curvature_check;
use finsler_core::submanifold::{
    hypersurface_normal, normal_residual, shape_operator, shape_operator_by_extension, CoOrientation,
};
use finsler_core::{corpus, Error, Metric, TangentVector, Vector};

pub const SUITES: [&str; 7] = ["tensors", "geodesics", "submanifold", "distance", "cut", "lemma_ct", "counterexample"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Holds,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    /// Acceptance criterion the check belongs to, if any.
    pub criterion: Option<u8>,
    pub name: String,
    pub measured: f64,
    pub comparison: Comparison,
    pub tolerance: f64,
    /// Signed distance to failure; negative when the check fails.
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(criterion: Option<u8>, name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        let margin = tolerance - measured;
        Self { criterion, name: name.into(), measured, comparison: Comparison::AtMost, tolerance, margin, pass: margin >= 0.0 }
    }

    pub fn at_least(criterion: Option<u8>, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        let margin = measured - bound;
        Self { criterion, name: name.into(), measured, comparison: Comparison::AtLeast, tolerance: bound, margin, pass: margin >= 0.0 }
    }

    pub fn holds(criterion: Option<u8>, name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self { criterion, name: name.into(), measured: v, comparison: Comparison::Holds, tolerance: 1.0, margin: v - 1.0, pass: ok }
    }

    fn failed(criterion: Option<u8>, name: impl Into<String>, err: &Error) -> Self {
        Self::holds(criterion, format!("{}: {err}", name.into()), false)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seconds: f64,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Run one suite by name, or every suite for `"all"`.
pub fn run(name: &str, seed: u64) -> Result<Vec<SuiteReport>, String> {
    if name == "all" {
        return Ok(SUITES.iter().map(|s| run_one(s, seed)).collect());
    }
    if !SUITES.contains(&name) {
        return Err(format!("unknown suite `{name}`; expected one of {} or all", SUITES.join(", ")));
    }
    Ok(vec![run_one(name, seed)])
}

fn run_one(name: &str, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match name {
        "tensors" => tensors(&mut rng),
        "geodesics" => geodesics(&mut rng),
        "submanifold" => submanifold(),
        "distance" => distance(&mut rng),
        "cut" => cut(),
        "lemma_ct" => lemma_ct(),
        "counterexample" => counterexample(),
        _ => unreachable!("suite names are checked by run"),
    };
    SuiteReport { suite: name.to_string(), seconds: start.elapsed().as_secs_f64(), checks }
}

fn v2(a: f64, b: f64) -> Vector {
    DVector::from_vec(vec![a, b])
}

/// Random point well inside the chart of a built-in metric.
fn random_point(m: &Metric, rng: &mut ChaCha8Rng, radius: f64) -> Vector {
    loop {
        let p = v2(rng.random_range(-radius..radius), rng.random_range(-radius..radius));
        let scaled_in = m.contains(&(&p * 1.05));
        if scaled_in && (m.name() != "HY" || p.norm() < 0.9 * radius) {
            return p;
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = v2(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() > 0.1 {
            return v;
        }
    }
}

fn sample_radius(m: &Metric) -> f64 {
    match m.name() {
        "HY" => 0.9,
        "CR" => 1.8,
        _ => 2.0,
    }
}

fn analytic_tensor_metrics() -> Vec<Metric> {
    vec![corpus::euclidean_plane(), corpus::randers_plane(), corpus::sphere_stereographic(), corpus::hyperbolic_disk()]
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn tensors(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let c = Some(1);
    let metrics = analytic_tensor_metrics();
    let fd: Vec<Metric> = metrics.iter().map(corpus::as_custom).collect();
    let mut identity = 0.0f64;
    let mut identity_fd = 0.0f64;
    let mut cartan_v = 0.0f64;
    let mut cartan_sym = 0.0f64;
    let mut cartan_riem = 0.0f64;
    let mut legendre = 0.0f64;
    let mut reverse_g = 0.0f64;
    let mut reverse_c = 0.0f64;
    let mut homogeneity = 0.0f64;
    let mut legendre_err = None;
    for i in 0..1000 {
        let k = i % metrics.len();
        let m = &metrics[k];
        let p = random_point(m, rng, sample_radius(m));
        let v = random_vector(rng);
        let u = random_vector(rng);
        let w = random_vector(rng);
        let f = m.norm(&p, &v);
        let g = m.fundamental(&p, &v);
        identity = identity.max((v.dot(&(&g * &v)) - f * f).abs());
        let cart = m.cartan(&p, &v);
        cartan_v = cartan_v.max(cart.contract(&v, &u, &w).abs() / (u.norm() * w.norm()));
        let vals = [
            cart.contract(&u, &v, &w),
            cart.contract(&u, &w, &v),
            cart.contract(&v, &w, &u),
            cart.contract(&w, &u, &v),
            cart.contract(&w, &v, &u),
        ];
        let base = cart.contract(&v, &u, &w);
        cartan_sym = cartan_sym.max(max_of(vals.iter().map(|x| (x - base).abs())));
        if m.is_riemannian() {
            cartan_riem = cartan_riem.max(cart.max_abs());
        }
        let tv = TangentVector::new(p.clone(), v.clone());
        match m.legendre(&tv).and_then(|xi| m.legendre_inverse(&xi)) {
            Ok(back) => legendre = legendre.max((back.components - &v).norm() / v.norm()),
            Err(e) => legendre_err = Some(e),
        }
        let rev = m.reverse();
        reverse_g = reverse_g.max((rev.fundamental(&p, &v) - m.fundamental(&p, &(-&v))).amax());
        let mut sum = rev.cartan(&p, &v);
        let neg = m.cartan(&p, &(-&v));
        sum.scale(-1.0);
        reverse_c = reverse_c.max(sum.sub(&neg).max_abs());
        for lambda in [0.5, 3.0] {
            homogeneity = homogeneity.max((m.norm(&p, &(&v * lambda)) - lambda * f).abs() / (lambda * f));
        }
        if i % 3 == 0 {
            let mf = &fd[k];
            let gf = mf.fundamental(&p, &v);
            let ff = mf.norm(&p, &v);
            identity_fd = identity_fd.max((v.dot(&(&gf * &v)) - ff * ff).abs());
        }
    }
    let mut out = vec![
        Check::at_most(c, "|g_v(v,v) - F(v)^2|, analytic, 1000 samples", identity, 1e-9),
        Check::at_most(c, "|g_v(v,v) - F(v)^2|, finite differences, 334 samples", identity_fd, 1e-6),
        Check::at_most(c, "|C_v(v,u,w)| / (|u||w|)", cartan_v, 1e-6),
        Check::at_most(None, "Cartan symmetry under permutations", cartan_sym, 1e-8),
        Check::at_most(c, "Cartan tensor on Riemannian metrics", cartan_riem, 1e-12),
        Check::at_most(c, "Legendre roundtrip, relative", legendre, 1e-8),
        Check::at_most(c, "reverse fundamental tensor g_rev(v) - g(-v)", reverse_g, 1e-9),
        Check::at_most(c, "reverse Cartan tensor C_rev(v) + C(-v)", reverse_c, 1e-9),
        Check::at_most(None, "positive homogeneity of F, relative", homogeneity, 1e-10),
    ];
    if let Some(e) = legendre_err {
        out.push(Check::failed(c, "Legendre transform", &e));
    }
    out
}

fn all_metrics() -> Vec<Metric> {
    vec![
        corpus::euclidean_plane(),
        corpus::randers_plane(),
        corpus::sphere_stereographic(),
        corpus::hyperbolic_disk(),
        corpus::quartic_minkowski(),
        corpus::custom_randers(),
    ]
}

fn geodesics(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let c = Some(2);
    let mut out = Vec::new();
    for m in all_metrics() {
        let starts: Vec<(Vector, Vector)> = (0..100)
            .map(|_| {
                let p = random_point(&m, rng, 0.5 * sample_radius(&m));
                let v = random_vector(rng);
                let f = m.norm(&p, &v);
                (p, v / f)
            })
            .collect();
        let drift = starts
            .par_iter()
            .map(|(p, v)| geodesic(&m, p, v, 5.0, &accurate_options(&m)).speed_drift(&m))
            .reduce(|| 0.0, f64::max);
        out.push(Check::at_most(c, format!("{}: F-speed drift on [0,5], 100 starts", m.name()), drift, 1e-6));
        let spray_h = max_of(starts.iter().flat_map(|(p, v)| {
            let g = spray(&m, p, v);
            [0.5, 2.0].map(|l| (spray(&m, p, &(v * l)) - &g * (l * l)).norm())
        }));
        out.push(Check::at_most(None, format!("{}: spray homogeneity", m.name()), spray_h, 1e-8));
    }
    for m in [corpus::euclidean_plane(), corpus::randers_plane()] {
        let mut err = 0.0f64;
        for _ in 0..50 {
            let p = random_point(&m, rng, 2.0);
            let v = random_vector(rng) * 2.0;
            match exp_map(&m, &TangentVector::new(p.clone(), v.clone())) {
                Ok(x) => err = err.max((x - (&p + &v)).norm()),
                Err(e) => out.push(Check::failed(c, format!("{}: exponential map", m.name()), &e)),
            }
        }
        out.push(Check::at_most(c, format!("{}: exp_p(v) - (p + v)", m.name()), err, 1e-8));
    }
    for (m, k) in [(corpus::sphere_stereographic(), 1.0), (corpus::hyperbolic_disk(), -1.0)] {
        let mut err = 0.0f64;
        for _ in 0..100 {
            let p = random_point(&m, rng, if k > 0.0 { 2.0 } else { 0.8 });
            let tv = TangentVector::new(p, random_vector(rng));
            match flag_curvature(&m, &tv, &random_vector(rng)) {
                Ok(kv) => err = err.max((kv - k).abs()),
                Err(Error::DegenerateFlag { .. }) => {}
                Err(e) => out.push(Check::failed(c, format!("{}: flag curvature", m.name()), &e)),
            }
        }
        out.push(Check::at_most(c, format!("{}: flag curvature - ({k})", m.name()), err, 1e-3));
        let mut err = 0.0f64;
        for _ in 0..10 {
            let p = random_point(&m, rng, 0.3);
            let e = random_vector(rng);
            let v = &e / m.norm(&p, &e);
            let w = v2(-v[1], v[0]);
            let tv = TangentVector::new(p.clone(), v.clone());
            match jacobi_field(&m, &tv, 2.0, &Vector::zeros(2), &w, &accurate_options(&m)) {
                Ok(rec) => {
                    for i in 1..=40 {
                        let t = 2.0 * i as f64 / 40.0;
                        let x = rec.along.point_at(t);
                        let j = rec.j_at(t);
                        let norm = m.norm(&x, &j);
                        let profile = if k > 0.0 { t.sin() } else { t.sinh() };
                        err = err.max((norm - profile).abs());
                    }
                }
                Err(e) => out.push(Check::failed(c, format!("{}: Jacobi field", m.name()), &e)),
            }
        }
        let profile = if k > 0.0 { "sin" } else { "sinh" };
        out.push(Check::at_most(c, format!("{}: |J(t)| - {profile}(t) on [0,2]", m.name()), err, 1e-3));
    }
    out
}

/// Level set `x^2/4 + y^2 = 1`, the ellipse with semi-axes 2 and 1.
fn ellipse_level_function() -> ScalarField {
    ScalarField::new(|x| 0.25 * x[0] * x[0] + x[1] * x[1]).with_differential(|x| v2(0.5 * x[0], 2.0 * x[1]))
}

fn submanifold() -> Vec<Check> {
    let mut out = Vec::new();
    let e2 = corpus::euclidean_plane();
    let origin = v2(0.0, 0.0);
    let dist = ScalarField::distance_from_point(&e2, &origin, DistanceOptions::default());
    let mut anchor = 0.0f64;
    for theta in [0.0f64, 0.7, 2.0, -2.5] {
        let p = v2(theta.cos(), theta.sin());
        let t = v2(-theta.sin(), theta.cos());
        match hessian(&e2, &dist, &p) {
            Ok(h) => anchor = anchor.max((h.apply(&t, &t) - 1.0).abs()),
            Err(e) => out.push(Check::failed(Some(8), "hessian of d(0, .)", &e)),
        }
    }
    out.push(Check::at_most(Some(8), "E2: Hess d(0,.)(t,t) - 1/r at r = 1", anchor, 1e-4));

    let ellipse = corpus::ellipse(2.0, 1.0);
    let level = ellipse_level_function();
    let outward = ellipse.inward().map(CoOrientation::flip).unwrap_or(CoOrientation::Positive);
    for m in [corpus::euclidean_plane(), corpus::randers_plane()] {
        let mut bridge = 0.0f64;
        let mut cone = 0.0f64;
        let mut adjoint = 0.0f64;
        let mut agree = 0.0f64;
        let mut reverse = 0.0f64;
        let rev = m.reverse();
        for u in ellipse.sample_params(24) {
            let r = hypersurface_normal(&m, &ellipse, &u, outward).and_then(|n| {
                let a = shape_operator(&m, &ellipse, &n)?;
                let b = shape_operator_by_extension(&m, &ellipse, &n)?;
                let l = level_set_shape(&m, &level, n.point())?;
                let flipped = hypersurface_normal(&rev, &ellipse, &u, outward.flip())?;
                let ar = shape_operator(&rev, &ellipse, &flipped)?;
                Ok((normal_residual(&m, &ellipse, &n), a, b, l, ar))
            });
            match r {
                Ok((res, a, b, l, ar)) => {
                    cone = cone.max(res);
                    adjoint = adjoint.max(a.self_adjointness_residual());
                    agree = agree.max((a.eigenvalues()[0] - b.eigenvalues()[0]).abs());
                    bridge = bridge.max((a.eigenvalues()[0] - l.eigenvalues()[0]).abs());
                    reverse = reverse.max((ar.eigenvalues()[0] + a.eigenvalues()[0]).abs());
                }
                Err(e) => out.push(Check::failed(Some(8), format!("{}: ellipse shape operators", m.name()), &e)),
            }
        }
        let name = m.name();
        out.push(Check::at_most(Some(8), format!("{name}: hessian-shape bridge on the ellipse level set"), bridge, 1e-4));
        out.push(Check::at_most(None, format!("{name}: normal-cone residual"), cone, 1e-8));
        out.push(Check::at_most(None, format!("{name}: A_n self-adjointness"), adjoint, 1e-7));
        out.push(Check::at_most(None, format!("{name}: two shape operator constructions"), agree, 1e-6));
        out.push(Check::at_most(None, format!("{name}: reversed shape operator + A_n"), reverse, 1e-6));
    }
    out
}

/// Sources and targets at least 0.5 apart inside the sampling region.
fn random_pairs(m: &Metric, rng: &mut ChaCha8Rng, radius: f64, sources: usize, targets: usize) -> Vec<(Vector, Vec<Vector>)> {
    (0..sources)
        .map(|_| {
            let p = random_point(m, rng, radius);
            let mut qs = Vec::new();
            while qs.len() < targets {
                let q = random_point(m, rng, radius);
                if (&q - &p).norm() >= 0.5 {
                    qs.push(q);
                }
            }
            (p, qs)
        })
        .collect()
}

fn distance(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let c = Some(3);
    let mut out = Vec::new();
    let shooting = DistanceOptions::shooting();
    for m in all_metrics() {
        let radius = match m.name() {
            "HY" => 0.6,
            "CR" => 1.2,
            _ => 1.0,
        };
        let pairs = random_pairs(&m, rng, radius, 20, 10);
        let mut lo = [-radius - 0.5, -radius - 0.5];
        let mut hi = [radius + 0.5, radius + 0.5];
        if let Some((clo, chi)) = m.domain().bounding_box() {
            for k in 0..2 {
                lo[k] = lo[k].max(clo[k]);
                hi[k] = hi[k].min(chi[k]);
            }
        }
        let oracle = match GridOracle::new(&m, lo, hi, 0.01) {
            Ok(o) => o,
            Err(e) => {
                out.push(Check::failed(c, format!("{}: grid oracle", m.name()), &e));
                continue;
            }
        };
        let errors: Vec<Result<f64, Error>> = pairs
            .par_iter()
            .flat_map_iter(|(p, qs)| {
                let field = oracle.distances_from(p);
                let m = &m;
                let shooting = &shooting;
                qs.iter().map(move |q| {
                    let grid = field.as_ref().map_err(Clone::clone)?.query(q)?;
                    let shot = distance_point(m, p, q, shooting)?;
                    Ok((shot.value - grid).abs() / shot.value)
                })
            })
            .collect();
        let mut worst = 0.0f64;
        let mut failures = 0;
        for e in errors {
            match e {
                Ok(r) => worst = worst.max(r),
                Err(e) => {
                    if failures == 0 {
                        out.push(Check::failed(c, format!("{}: shooting vs oracle pair", m.name()), &e));
                    }
                    failures += 1;
                }
            }
        }
        out.push(Check::at_most(c, format!("{}: |shooting - oracle| / d over 200 pairs", m.name()), worst, 0.03));
    }

    let rd = corpus::randers_plane();
    let (a, b) = (v2(0.0, 0.0), v2(1.0, 0.0));
    let closed = DistanceOptions::default();
    for (p, q, expect) in [(&a, &b, 1.5), (&b, &a, 0.5)] {
        let label = format!("RD: d({:?}, {:?})", p.as_slice(), q.as_slice());
        match distance_point(&rd, p, q, &closed) {
            Ok(r) => out.push(Check::at_most(c, format!("{label} - {expect}, closed form"), (r.value - expect).abs(), 0.0)),
            Err(e) => out.push(Check::failed(c, label.clone(), &e)),
        }
        match GridOracle::for_points(&rd, p, q, 0.01).and_then(|o| o.distances_from(p)?.query(q)) {
            Ok(d) => out.push(Check::at_most(c, format!("{label}, oracle relative error"), (d - expect).abs() / expect, 0.03)),
            Err(e) => out.push(Check::failed(c, label, &e)),
        }
    }

    for m in [corpus::randers_plane(), corpus::custom_randers(), corpus::hyperbolic_disk()] {
        let rev = m.reverse();
        let radius = if m.name() == "HY" { 0.6 } else { 1.0 };
        let pairs = random_pairs(&m, rng, radius, 10, 1);
        let errs: Vec<Result<f64, Error>> = pairs
            .par_iter()
            .map(|(p, qs)| {
                let forward = distance_point(&m, p, &qs[0], &shooting)?.value;
                let backward = distance_point(&rev, &qs[0], p, &shooting)?.value;
                Ok((forward - backward).abs())
            })
            .collect();
        let mut worst = 0.0f64;
        for e in errs {
            match e {
                Ok(v) => worst = worst.max(v),
                Err(e) => out.push(Check::failed(c, format!("{}: reverse duality", m.name()), &e)),
            }
        }
        out.push(Check::at_most(c, format!("{}: |d(p,q) - d_rev(q,p)|, shooting", m.name()), worst, 1e-6));
    }
    out
}

struct CutCase {
    label: &'static str,
    metric: Metric,
    sub: finsler_core::submanifold::Submanifold,
    anchor: Option<(f64, f64, bool)>,
}

fn cut_cases() -> Vec<CutCase> {
    vec![
        CutCase { label: "circle/E2", metric: corpus::euclidean_plane(), sub: corpus::circle(1.0), anchor: Some((1.0, 1e-3, false)) },
        CutCase { label: "circle/RD", metric: corpus::randers_plane(), sub: corpus::circle(1.0), anchor: None },
        CutCase { label: "equator/SP", metric: corpus::sphere_stereographic(), sub: corpus::equator(), anchor: Some((FRAC_PI_2, 1e-3, false)) },
        CutCase { label: "ellipse/E2", metric: corpus::euclidean_plane(), sub: corpus::ellipse(2.0, 1.0), anchor: Some((0.5, 0.01, true)) },
    ]
}

fn cloud_distance(cloud: &CutLocusCloud, x: &Vector) -> f64 {
    cloud.points.iter().map(|p| (p - x).norm()).fold(f64::INFINITY, f64::min)
}

fn cut() -> Vec<Check> {
    let mut out = Vec::new();
    let opts = CutOptions::default();
    for case in cut_cases() {
        let (m, sub, label) = (&case.metric, &case.sub, case.label);
        let cloud = match cut_locus_sample(m, sub, 500, &opts) {
            Ok(c) => c,
            Err(e) => {
                out.push(Check::failed(Some(4), format!("{label}: cut locus"), &e));
                continue;
            }
        };
        out.push(Check::holds(Some(4), format!("{label}: 500 normals sampled"), cloud.samples.len() >= 500));
        out.push(Check::at_least(Some(4), format!("{label}: min cut time over 500 normals"), cloud.injectivity, 1e-3));
        if let Some((target, tol, relative)) = case.anchor {
            let err = (cloud.injectivity - target).abs() / if relative { target } else { 1.0 };
            let kind = if relative { "relative" } else { "absolute" };
            out.push(Check::at_most(Some(4), format!("{label}: Inj+ - {target:.6}, {kind}"), err, tol));
        }
        out.push(Check::holds(Some(5), format!("{label}: d(N, x) > 0 on the cut-locus cloud"), cloud.disjoint && !cloud.points.is_empty()));
        let rel = (cloud.distance_to_n - cloud.injectivity).abs() / cloud.injectivity;
        out.push(Check::at_most(Some(5), format!("{label}: |d(N, Cu) - Inj+| / Inj+"), rel, 0.02));
        let ftol = opts.focal_tolerance();
        let ordering = max_of(cloud.samples.iter().filter_map(|s| Some(s.rho.finite()? - s.focal_time?)));
        out.push(Check::at_most(Some(8), format!("{label}: rho - first focal time"), ordering, ftol));

        if label == "circle/E2" || label == "ellipse/E2" {
            let inj = cloud.injectivity;
            match tubular_verify(m, sub, 0.9 * inj, 100, Some(inj), &opts) {
                Ok(r) => {
                    out.push(Check::at_most(Some(5), format!("{label}: collisions at 0.9 Inj+"), r.collision_count as f64, 0.0));
                    out.push(Check::holds(
                        Some(5),
                        format!("{label}: {}/{} probes reached within 1e-4", r.probes_covered, r.probes_tested),
                        r.probes_tested > 0 && r.probes_covered == r.probes_tested,
                    ));
                }
                Err(e) => out.push(Check::failed(Some(5), format!("{label}: tubular check at 0.9 Inj+"), &e)),
            }
            let detected = matches!(tubular_verify(m, sub, 1.2 * inj, 10, Some(inj), &opts), Err(Error::EpsilonTooLarge { .. }));
            out.push(Check::holds(Some(5), format!("{label}: collisions detected at 1.2 Inj+"), detected));
        }

        if label == "ellipse/E2" || label == "circle/RD" {
            let h = 0.05f64;
            let (lo, hi) = ([-2.5f64, -1.5], [2.5f64, 1.5]);
            let queries: Vec<Vector> = (0..=((hi[0] - lo[0]) / h).round() as usize)
                .flat_map(|i| {
                    (0..=((hi[1] - lo[1]) / h).round() as usize).map(move |j| v2(lo[0] + i as f64 * h, lo[1] + j as f64 * h))
                })
                .filter(|x| {
                    let s = sub.point(&[x[1].atan2(x[0])]);
                    x.norm() < s.norm()
                })
                .collect();
            match separating_points(m, sub, &queries, &opts.distance) {
                Ok(se) => {
                    let worst = max_of(se.iter().map(|s| cloud_distance(&cloud, &s.point)));
                    out.push(Check::holds(Some(8), format!("{label}: separating points found ({})", se.len()), !se.is_empty()));
                    out.push(Check::at_most(Some(8), format!("{label}: Se(N) distance to the cut-locus cloud"), worst, 2.0 * h));
                }
                Err(e) => out.push(Check::failed(Some(8), format!("{label}: separating points"), &e)),
            }
        }
    }
    out
}

fn lemma_ct() -> Vec<Check> {
    let c = Some(6);
    let cases = [
        corpus::euclidean_plane(),
        corpus::sphere_stereographic(),
        corpus::hyperbolic_disk(),
        corpus::randers_plane(),
    ];
    let mut out = Vec::new();
    for m in &cases {
        for r in [0.1, 0.2, 0.4] {
            let label = format!("{} r={r}", m.name());
            match backward_sphere_curvature_check(m, &v2(0.0, 0.0), r, 50) {
                Ok(rep) => {
                    out.push(Check::at_least(
                        c,
                        format!("{label}: min kappa - ct (ct = {:.6}, lambda = {:.4})", rep.ct_value, rep.lambda_est),
                        rep.min_kappa - rep.ct_value,
                        -1e-3,
                    ));
                    if m.name() == "E2" {
                        let eq = (rep.max_kappa - rep.ct_value).abs().max((rep.min_kappa - rep.ct_value).abs());
                        out.push(Check::at_most(c, format!("{label}: |kappa - 1/r|"), eq, 1e-3));
                    }
                    out.push(Check::at_most(c, format!("{label}: reversed shape operator + A_n"), rep.sign_law_residual, 1e-6));
                    out.push(Check::at_most(None, format!("{label}: kappa vs Jacobi quotient"), rep.jacobi_residual, 1e-4));
                }
                Err(e) => out.push(Check::failed(c, label, &e)),
            }
        }
    }
    out
}

fn counterexample() -> Vec<Check> {
    let c = Some(7);
    let mut out = Vec::new();
    let e2 = corpus::euclidean_plane();
    let x32 = corpus::x32_curve();
    let dopts = DistanceOptions::default();
    for t in [0.2, 0.1, 0.05] {
        let label = format!("x32: q = (0, {t})");
        match singleton_intersection_check(&e2, &x32, &v2(0.0, t), 1e-6, &dopts) {
            Ok(s) => out.push(Check::holds(c, format!("{label}: multiple ({} witnesses)", s.witnesses.len()), !s.unique && s.witnesses.len() >= 2)),
            Err(e) => out.push(Check::failed(c, label, &e)),
        }
    }
    let ellipse = corpus::ellipse(2.0, 1.0);
    for q in [v2(1.8, 0.0), v2(1.9, 0.0), v2(1.95, 0.0), v2(0.0, 0.8), v2(0.0, 0.9), v2(0.0, 0.95), v2(1.2, 0.6)] {
        let label = format!("ellipse: q = {:?}", q.as_slice());
        match singleton_intersection_check(&e2, &ellipse, &q, 1e-6, &dopts) {
            Ok(s) => out.push(Check::holds(c, format!("{label}: unique at distance {:.4}", s.distance), s.unique && s.distance < 0.5)),
            Err(e) => out.push(Check::failed(c, label, &e)),
        }
    }
    let fine = CutOptions {
        tol_d: 1e-8,
        distance: DistanceOptions { sample_count: 4096, ..DistanceOptions::default() },
        ..CutOptions::default()
    };
    match interior_radius_study(&e2, &x32, 0.0, 1.0 / 32.0, 5, &fine) {
        Ok(levels) => {
            let radii: Vec<String> = levels.iter().map(|l| format!("{:.4}", l.radius)).collect();
            let monotone = levels.windows(2).all(|w| w[1].radius < w[0].radius);
            out.push(Check::holds(c, format!("x32: interior radius decreases under refinement [{}]", radii.join(", ")), monotone));
            let last = levels.last().map(|l| l.radius).unwrap_or(f64::INFINITY);
            let first = levels.first().map(|l| l.radius).unwrap_or(0.0);
            out.push(Check::at_most(c, "x32: finest radius / coarsest radius", last / first, 0.5));
        }
        Err(e) => out.push(Check::failed(c, "x32: interior radius study", &e)),
    }
    out
}
