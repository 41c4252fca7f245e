//! Finsler distance between points and from a submanifold to a point.
//!
//! Point distances use closed forms for the built-in families (flat norms,
//! the round sphere and the hyperbolic disk) and geodesic shooting otherwise.
//! The distance from a submanifold `N` to `q` minimizes `u -> d(x(u), q)` by a
//! coarse parameter sweep followed by local refinement.

mod oracle;

pub use oracle::{grid_oracle_distance, DistanceField, GridOracle};

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodesic::{accurate_options, geodesic, GeodesicRecord};
use crate::linalg::{brent_minimize, nelder_mead};
use crate::metric::{ConformalFactor, Metric, MetricKind};
use crate::ode::{OdeOptions, Termination};
use crate::submanifold::{normal_residual, NormalVector, Submanifold};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMethod {
    /// Closed form when available, shooting otherwise.
    Auto,
    Shooting,
    ClosedForm,
}

/// How a distance value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    ClosedForm,
    Shooting,
    GridOracle,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodTag::ClosedForm => "closed_form",
            MethodTag::Shooting => "shooting",
            MethodTag::GridOracle => "grid_oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceOptions {
    pub method: DistanceMethod,
    /// Coarse parameter samples for submanifold distances.
    pub sample_count: usize,
    /// Points of the local sweep around each coarse minimum.
    pub fine_samples: usize,
    /// Minimizers whose values are within this of the minimum are counted.
    pub cluster_value_tol: f64,
    /// Angle (radians) separating distinct minimizer directions.
    pub cluster_angle: f64,
    /// Foot-point separation, relative to the submanifold diameter.
    pub cluster_foot_rel: f64,
    /// Shooting: number of initial directions.
    pub shooting_starts: usize,
    /// Shooting: basins refined by Newton iteration.
    pub shooting_basins: usize,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        Self {
            method: DistanceMethod::Auto,
            sample_count: 1024,
            fine_samples: 64,
            cluster_value_tol: 1e-6,
            cluster_angle: 0.05,
            cluster_foot_rel: 1e-3,
            shooting_starts: 64,
            shooting_basins: 4,
        }
    }
}

impl DistanceOptions {
    pub fn shooting() -> Self {
        Self { method: DistanceMethod::Shooting, ..Self::default() }
    }
}

/// One minimizer cluster of a distance computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimizerCluster {
    /// Foot parameter (empty for point distances).
    pub u: Vec<f64>,
    pub foot: Vector,
    /// Unit initial velocity of the minimizing geodesic at the foot.
    pub direction: Option<Vector>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct DistanceResult {
    pub value: f64,
    /// Unit-speed minimizing geodesic from the foot (or source) to the target.
    pub minimizer: GeodesicRecord,
    pub initial_direction: Option<Vector>,
    pub foot_u: Vec<f64>,
    pub foot: Vector,
    /// Number of distinct minimizer clusters.
    pub multiplicity: usize,
    /// All-directions plateau (for instance the centre of a circle).
    pub degenerate: bool,
    pub method: MethodTag,
    /// First-variation residual of the minimizer (submanifold case) or
    /// endpoint miss (point case).
    pub residual: f64,
    pub clusters: Vec<MinimizerCluster>,
}

/// Closed-form distance, if the metric family has one.
pub fn closed_form_distance(m: &Metric, p: &Vector, q: &Vector) -> Option<f64> {
    let d = q - p;
    if d.iter().all(|c| *c == 0.0) {
        return Some(0.0);
    }
    match m.kind() {
        MetricKind::Conformal(ConformalFactor::Constant(c)) => Some(c * d.norm()),
        MetricKind::Randers { .. } | MetricKind::Minkowski { .. } => Some(m.norm(p, &d)),
        MetricKind::Conformal(ConformalFactor::Sphere) => {
            let lift = |x: &Vector| {
                let s = 1.0 + x.norm_squared();
                let mut v: Vec<f64> = x.iter().map(|c| 2.0 * c / s).collect();
                v.push((x.norm_squared() - 1.0) / s);
                Vector::from_vec(v)
            };
            let chord = (lift(p) - lift(q)).norm();
            Some(2.0 * (0.5 * chord).min(1.0).asin())
        }
        MetricKind::Conformal(ConformalFactor::Hyperbolic) => {
            let a = 1.0 - p.norm_squared();
            let b = 1.0 - q.norm_squared();
            if a <= 0.0 || b <= 0.0 {
                return None;
            }
            Some(2.0 * (d.norm() / (a * b).sqrt()).asinh())
        }
        MetricKind::Custom { .. } => None,
    }
}

fn check_points(m: &Metric, pts: &[&Vector]) -> Result<()> {
    for p in pts {
        if p.len() != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), got: p.len() });
        }
        if !m.contains(p) {
            return Err(Error::OutsideChart { point: p.iter().copied().collect() });
        }
    }
    Ok(())
}

fn uses_closed_form(m: &Metric, opts: &DistanceOptions) -> Result<bool> {
    let available = !matches!(m.kind(), MetricKind::Custom { .. });
    match opts.method {
        DistanceMethod::Auto => Ok(available),
        DistanceMethod::Shooting => Ok(false),
        DistanceMethod::ClosedForm if available => Ok(true),
        DistanceMethod::ClosedForm => Err(Error::Unsupported(format!("no closed-form distance for {}", m.name()))),
    }
}

/// `d(p, q)` only.
pub fn point_distance_value(m: &Metric, p: &Vector, q: &Vector, opts: &DistanceOptions) -> Result<f64> {
    if uses_closed_form(m, opts)? {
        return closed_form_distance(m, p, q).ok_or_else(|| Error::OutsideChart { point: q.iter().copied().collect() });
    }
    let shots = shoot(m, p, q, opts)?;
    Ok(shots[0].t)
}

/// Unit initial velocity at `p` of a minimizing geodesic from `p` to `q`,
/// from the differential of `x -> d(x, q)`: `v = L^{-1}(-d_x d(x, q))`.
fn velocity_from_gradient(m: &Metric, p: &Vector, q: &Vector, opts: &DistanceOptions) -> Result<Option<Vector>> {
    let d0 = point_distance_value(m, p, q, opts)?;
    if d0 <= 1e-12 {
        return Ok(None);
    }
    let h = 1e-6 * p.norm().max(1.0).min(d0.max(1e-3));
    let mut grad = Vector::zeros(m.dim());
    for k in 0..m.dim() {
        let mut pp = p.clone();
        let mut pm = p.clone();
        pp[k] += h;
        pm[k] -= h;
        grad[k] = (point_distance_value(m, &pp, q, opts)? - point_distance_value(m, &pm, q, opts)?) / (2.0 * h);
    }
    if grad.norm() == 0.0 {
        return Ok(None);
    }
    let v = m.legendre_inverse_raw(p, &-grad)?;
    let f = m.norm(p, &v);
    Ok(Some(v / f))
}

fn initial_velocity(m: &Metric, p: &Vector, q: &Vector, opts: &DistanceOptions) -> Result<Option<Vector>> {
    if uses_closed_form(m, opts)? {
        velocity_from_gradient(m, p, q, opts)
    } else if p == q {
        Ok(None)
    } else {
        Ok(Some(shoot(m, p, q, opts)?[0].velocity.clone()))
    }
}

fn trivial_record(m: &Metric, p: &Vector) -> GeodesicRecord {
    geodesic(m, p, &Vector::zeros(m.dim()), 0.0, &accurate_options(m))
}

/// Distance `d(p, q)` with its minimizer.
pub fn distance_point(m: &Metric, p: &Vector, q: &Vector, opts: &DistanceOptions) -> Result<DistanceResult> {
    check_points(m, &[p, q])?;
    let closed = uses_closed_form(m, opts)?;
    if p == q {
        return Ok(DistanceResult {
            value: 0.0,
            minimizer: trivial_record(m, p),
            initial_direction: None,
            foot_u: Vec::new(),
            foot: p.clone(),
            multiplicity: 1,
            degenerate: false,
            method: if closed { MethodTag::ClosedForm } else { MethodTag::Shooting },
            residual: 0.0,
            clusters: vec![MinimizerCluster { u: Vec::new(), foot: p.clone(), direction: None, value: 0.0 }],
        });
    }
    if closed {
        let value = point_distance_value(m, p, q, opts)?;
        let v = velocity_from_gradient(m, p, q, opts)?;
        let (minimizer, residual) = match &v {
            Some(v) => {
                let rec = geodesic(m, p, v, value, &accurate_options(m));
                let miss = (rec.end_point() - q).norm();
                (rec, miss)
            }
            None => (trivial_record(m, p), 0.0),
        };
        return Ok(DistanceResult {
            value,
            minimizer,
            initial_direction: v.clone(),
            foot_u: Vec::new(),
            foot: p.clone(),
            multiplicity: 1,
            degenerate: false,
            method: MethodTag::ClosedForm,
            residual,
            clusters: vec![MinimizerCluster { u: Vec::new(), foot: p.clone(), direction: v, value }],
        });
    }
    let shots = shoot(m, p, q, opts)?;
    let best = &shots[0];
    let mut clusters: Vec<MinimizerCluster> = Vec::new();
    for s in &shots {
        if s.t > best.t + opts.cluster_value_tol {
            continue;
        }
        let distinct = clusters
            .iter()
            .all(|c| angle_between(c.direction.as_ref().expect("shooting direction"), &s.velocity) > opts.cluster_angle);
        if distinct {
            clusters.push(MinimizerCluster { u: Vec::new(), foot: p.clone(), direction: Some(s.velocity.clone()), value: s.t });
        }
    }
    let minimizer = geodesic(m, p, &best.velocity, best.t, &accurate_options(m));
    Ok(DistanceResult {
        value: best.t,
        residual: (minimizer.end_point() - q).norm(),
        minimizer,
        initial_direction: Some(best.velocity.clone()),
        foot_u: Vec::new(),
        foot: p.clone(),
        multiplicity: clusters.len(),
        degenerate: false,
        method: MethodTag::Shooting,
        clusters,
    })
}

fn angle_between(a: &Vector, b: &Vector) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

// ----------------------------------------------------------------------
// Shooting.
// ----------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Shot {
    t: f64,
    velocity: Vector,
}

fn euclidean_direction(theta: &[f64]) -> Vector {
    match theta.len() {
        1 => Vector::from_vec(vec![theta[0].cos(), theta[0].sin()]),
        _ => Vector::from_vec(vec![
            theta[1].sin() * theta[0].cos(),
            theta[1].sin() * theta[0].sin(),
            theta[1].cos(),
        ]),
    }
}

fn start_angles(dim: usize, count: usize) -> Vec<Vec<f64>> {
    if dim == 2 {
        return (0..count).map(|i| vec![2.0 * PI * (i as f64 + 0.5) / count as f64]).collect();
    }
    // Fibonacci lattice on the sphere.
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            vec![(golden * i as f64).rem_euclid(2.0 * PI), z.acos()]
        })
        .collect()
}

fn straight_length(m: &Metric, p: &Vector, q: &Vector) -> f64 {
    let pieces = 64;
    let d = (q - p) / pieces as f64;
    let mut len = 0.0;
    for i in 0..pieces {
        let mid = p + &d * (i as f64 + 0.5);
        if !m.contains(&mid) {
            return f64::INFINITY;
        }
        len += m.norm(&mid, &d);
    }
    len
}

fn shoot(m: &Metric, p: &Vector, q: &Vector, opts: &DistanceOptions) -> Result<Vec<Shot>> {
    let dim = m.dim();
    if !(2..=3).contains(&dim) {
        return Err(Error::Unsupported(format!("shooting in dimension {dim}")));
    }
    check_points(m, &[p, q])?;
    let scale = q.norm().max(p.norm()).max(1.0);
    let mut t_max = 1.5 * straight_length(m, p, q);
    if !t_max.is_finite() {
        t_max = 50.0 * m.norm(p, &(q - p)).max(1.0);
    }
    let velocity = |theta: &[f64]| {
        let e = euclidean_direction(theta);
        let f = m.norm(p, &e);
        e / f
    };
    let coarse = OdeOptions::with_tol(1e-9);
    let starts = start_angles(dim, opts.shooting_starts);
    let mut probes: Vec<(f64, Vec<f64>, f64)> = starts
        .par_iter()
        .map(|theta| {
            let rec = geodesic(m, p, &velocity(theta), t_max, &coarse);
            let t_end = rec.t_end();
            let mut best = (f64::INFINITY, 0.0);
            let samples = 256;
            for i in 0..=samples {
                let t = t_end * i as f64 / samples as f64;
                let dist = (rec.point_at(t) - q).norm();
                if dist < best.0 {
                    best = (dist, t);
                }
            }
            (best.0, theta.clone(), best.1)
        })
        .collect();
    probes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let spacing = if dim == 2 { 2.0 * PI / opts.shooting_starts as f64 } else { (4.0 * PI / opts.shooting_starts as f64).sqrt() };
    let mut chosen: Vec<(Vec<f64>, f64)> = Vec::new();
    for (_, theta, t) in &probes {
        let e = euclidean_direction(theta);
        if chosen.iter().all(|(th, _)| angle_between(&euclidean_direction(th), &e) > 1.5 * spacing) {
            chosen.push((theta.clone(), *t));
        }
        if chosen.len() >= opts.shooting_basins {
            break;
        }
    }
    let mut shots: Vec<Shot> = chosen
        .par_iter()
        .filter_map(|(theta, t)| newton_shot(m, p, q, theta, *t, scale, &velocity))
        .collect();
    if shots.is_empty() {
        return Err(Error::Unreachable(format!(
            "no geodesic from {:?} reaches {:?} inside the chart",
            p.as_slice(),
            q.as_slice()
        )));
    }
    shots.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(shots)
}

fn newton_shot(
    m: &Metric,
    p: &Vector,
    q: &Vector,
    theta0: &[f64],
    t0: f64,
    scale: f64,
    velocity: &dyn Fn(&[f64]) -> Vector,
) -> Option<Shot> {
    let dim = m.dim();
    let k = dim - 1;
    let opts = accurate_options(m);
    let endpoint = |theta: &[f64], t: f64| -> Option<(Vector, Vector)> {
        if !(t > 0.0) {
            return None;
        }
        let rec = geodesic(m, p, &velocity(theta), t, &opts);
        if rec.terminated_by != Termination::TimeEnd {
            return None;
        }
        Some((rec.end_point().clone(), rec.end_velocity().clone()))
    };
    let mut theta = theta0.to_vec();
    let mut t = t0.max(1e-6);
    let (mut x, mut xdot) = endpoint(&theta, t)?;
    let mut r = &x - q;
    let tol = 1e-11 * scale;
    for _ in 0..50 {
        if r.norm() < tol {
            return Some(Shot { t, velocity: velocity(&theta) });
        }
        let h = 1e-7;
        let mut jac = Matrix::zeros(dim, dim);
        for i in 0..k {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[i] += h;
            tm[i] -= h;
            let (xp, _) = endpoint(&tp, t)?;
            let (xm, _) = endpoint(&tm, t)?;
            jac.set_column(i, &((xp - xm) / (2.0 * h)));
        }
        jac.set_column(k, &xdot);
        let step = jac.lu().solve(&(-&r))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let mut nt = theta.clone();
            for i in 0..k {
                nt[i] += lambda * step[i];
            }
            let ntime = t + lambda * step[k];
            if let Some((nx, nxd)) = endpoint(&nt, ntime) {
                let nr = &nx - q;
                if nr.norm() < r.norm() {
                    theta = nt;
                    t = ntime;
                    x = nx;
                    xdot = nxd;
                    r = nr;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let _ = x;
    if r.norm() < 1e3 * tol {
        Some(Shot { t, velocity: velocity(&theta) })
    } else {
        None
    }
}

// ----------------------------------------------------------------------
// Distance to a submanifold.
// ----------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Candidate {
    u: Vec<f64>,
    value: f64,
}

/// Local minimizers of `u -> d(x(u), q)`, sorted by value.
#[derive(Debug, Clone)]
pub struct SubmanifoldMinima {
    candidates: Vec<Candidate>,
    pub degenerate: bool,
}

impl SubmanifoldMinima {
    pub fn value(&self) -> f64 {
        self.candidates[0].value
    }

    pub fn best_u(&self) -> &[f64] {
        &self.candidates[0].u
    }

    /// Parameters and values of every refined local minimum.
    pub fn local_minima(&self) -> Vec<(Vec<f64>, f64)> {
        self.candidates.iter().map(|c| (c.u.clone(), c.value)).collect()
    }
}

/// Value-only minimization of `u -> d(x(u), q)`.
pub fn submanifold_minima(m: &Metric, sub: &Submanifold, q: &Vector, opts: &DistanceOptions) -> Result<SubmanifoldMinima> {
    check_points(m, &[q])?;
    let eval = |u: &[f64]| -> f64 {
        let x = sub.point(u);
        if !m.contains(&x) {
            return f64::INFINITY;
        }
        point_distance_value(m, &x, q, opts).unwrap_or(f64::INFINITY)
    };
    let k = sub.param_dim();
    if k == 0 {
        let value = eval(&[]);
        if !value.is_finite() {
            return Err(Error::Unreachable(format!("{:?} from {}", q.as_slice(), sub.name())));
        }
        return Ok(SubmanifoldMinima { candidates: vec![Candidate { u: Vec::new(), value }], degenerate: false });
    }
    let samples = sub.sample_params(opts.sample_count);
    let values: Vec<f64> = if uses_closed_form(m, opts)? {
        samples.iter().map(|u| eval(u)).collect()
    } else {
        samples.par_iter().map(|u| eval(u)).collect()
    };
    let fmin = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !fmin.is_finite() {
        return Err(Error::Unreachable(format!("{:?} from {}", q.as_slice(), sub.name())));
    }
    let mut refined: Vec<Candidate> = Vec::new();
    let mut degenerate = false;
    if k == 1 {
        let n = samples.len();
        let periodic = sub.periodic()[0];
        let (lo, hi) = sub.param_box();
        let du = (hi[0] - lo[0]) / n as f64;
        let plateau_tol = 1e-9 * fmin.max(1e-3);
        // Plateau: three consecutive samples at the minimum value.
        let near: Vec<bool> = values.iter().map(|v| *v <= fmin + plateau_tol).collect();
        let near_count = near.iter().filter(|b| **b).count();
        for j in 0..n {
            let prev = if j > 0 { Some(j - 1) } else if periodic { Some(n - 1) } else { None };
            let next = if j + 1 < n { Some(j + 1) } else if periodic { Some(0) } else { None };
            if near[j] && prev.is_some_and(|i| near[i]) && next.is_some_and(|i| near[i]) {
                degenerate = true;
                break;
            }
        }
        if degenerate && near_count >= 3 {
            for j in 0..n {
                if near[j] {
                    refined.push(Candidate { u: samples[j].clone(), value: values[j] });
                }
            }
        } else {
            degenerate = false;
            let mut minima: Vec<usize> = Vec::new();
            for j in 0..n {
                let left = if j > 0 { values[j - 1] } else if periodic { values[n - 1] } else { f64::INFINITY };
                let right = if j + 1 < n { values[j + 1] } else if periodic { values[0] } else { f64::INFINITY };
                if values[j] <= left && values[j] <= right && values[j].is_finite() {
                    minima.push(j);
                }
            }
            minima.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
            let spread = values.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max) - fmin;
            minima.retain(|&j| values[j] <= fmin + 0.05 * spread.max(1e-12) + 1e-9);
            minima.truncate(16);
            // Include the non-periodic end points, which may be boundary minima.
            for j in minima {
                let uc = samples[j][0];
                let (a, b) = if periodic {
                    (uc - 1.5 * du, uc + 1.5 * du)
                } else {
                    ((uc - 1.5 * du).max(lo[0]), (uc + 1.5 * du).min(hi[0]))
                };
                let fine = opts.fine_samples.max(8);
                let fu: Vec<f64> = (0..=fine).map(|i| a + (b - a) * i as f64 / fine as f64).collect();
                let fv: Vec<f64> = fu.iter().map(|u| eval(&[*u])).collect();
                let fdu = (b - a) / fine as f64;
                for i in 0..=fine {
                    let left = if i > 0 { fv[i - 1] } else { f64::INFINITY };
                    let right = if i < fine { fv[i + 1] } else { f64::INFINITY };
                    if fv[i] <= left && fv[i] <= right && fv[i].is_finite() {
                        let (lo_b, hi_b) = ((fu[i] - fdu).max(a), (fu[i] + fdu).min(b));
                        let (u, v) = brent_minimize(|x| eval(&[x]), lo_b, hi_b, 1e-12, 200);
                        let (u, v) = if v <= fv[i] { (u, v) } else { (fu[i], fv[i]) };
                        refined.push(Candidate { u: sub.wrap(&[u]), value: v });
                    }
                }
            }
        }
    } else {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
        let (lo, hi) = sub.param_box();
        let step = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(f64::INFINITY, f64::min) / (samples.len() as f64).sqrt();
        for &j in order.iter().take(8) {
            let (u, v) = nelder_mead(|x| eval(x), &samples[j], step, 1e-11, 4000);
            refined.push(Candidate { u: sub.wrap(&u), value: v });
        }
    }
    refined.sort_by(|a, b| a.value.total_cmp(&b.value));
    // Drop duplicates of the same local minimum.
    let mut unique: Vec<Candidate> = Vec::new();
    for c in refined {
        if unique.iter().all(|e| sub.param_distance(&e.u, &c.u) > 1e-7) {
            unique.push(c);
        }
    }
    Ok(SubmanifoldMinima { candidates: unique, degenerate })
}

/// Minimizer clusters with values within `value_tol` of the minimum.
pub fn minimizer_clusters(
    m: &Metric,
    sub: &Submanifold,
    q: &Vector,
    minima: &SubmanifoldMinima,
    value_tol: f64,
    opts: &DistanceOptions,
    with_directions: bool,
) -> Result<Vec<MinimizerCluster>> {
    let best = minima.value();
    let foot_tol = opts.cluster_foot_rel * sub.diameter();
    let mut clusters: Vec<MinimizerCluster> = Vec::new();
    for c in &minima.candidates {
        if c.value > best + value_tol {
            continue;
        }
        let foot = sub.point(&c.u);
        let direction = if with_directions { initial_velocity(m, &foot, q, opts)? } else { None };
        let distinct = clusters.iter().all(|e| {
            let far = (&e.foot - &foot).norm() > foot_tol;
            let turned = match (&e.direction, &direction) {
                (Some(a), Some(b)) => angle_between(a, b) > opts.cluster_angle,
                _ => false,
            };
            far || turned
        });
        if distinct {
            clusters.push(MinimizerCluster { u: c.u.clone(), foot, direction, value: c.value });
        }
    }
    Ok(clusters)
}

/// `d(N, q)` with its N-segment and minimizer clusters.
pub fn distance_to_submanifold(m: &Metric, sub: &Submanifold, q: &Vector, opts: &DistanceOptions) -> Result<DistanceResult> {
    let minima = submanifold_minima(m, sub, q, opts)?;
    let closed = uses_closed_form(m, opts)?;
    // A plateau is resolved only up to the sampling; directions are skipped.
    let clusters = minimizer_clusters(m, sub, q, &minima, opts.cluster_value_tol, opts, !minima.degenerate)?;
    let value = minima.value();
    let foot_u = minima.best_u().to_vec();
    let foot = sub.point(&foot_u);
    let direction = match clusters.first().and_then(|c| c.direction.clone()) {
        Some(d) => Some(d),
        None => initial_velocity(m, &foot, q, opts)?,
    };
    let (minimizer, residual) = match &direction {
        Some(v) => {
            let rec = geodesic(m, &foot, v, value, &accurate_options(m));
            let normal = NormalVector {
                u: foot_u.clone(),
                vector: crate::metric::TangentVector::new(foot.clone(), v.clone()),
                side: None,
            };
            (rec, normal_residual(m, sub, &normal))
        }
        None => (trivial_record(m, &foot), 0.0),
    };
    Ok(DistanceResult {
        value,
        minimizer,
        initial_direction: direction,
        foot_u,
        foot,
        multiplicity: clusters.len(),
        degenerate: minima.degenerate,
        method: if closed { MethodTag::ClosedForm } else { MethodTag::Shooting },
        residual,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn randers_asymmetry_closed_form() {
        let rd = corpus::randers_plane();
        let o = DistanceOptions::default();
        assert_eq!(distance_point(&rd, &v2(0.0, 0.0), &v2(1.0, 0.0), &o).unwrap().value, 1.5);
        assert_eq!(distance_point(&rd, &v2(1.0, 0.0), &v2(0.0, 0.0), &o).unwrap().value, 0.5);
    }

    #[test]
    fn euclidean_three_four_five() {
        let e2 = corpus::euclidean_plane();
        let r = distance_point(&e2, &v2(0.0, 0.0), &v2(3.0, 4.0), &DistanceOptions::default()).unwrap();
        assert_eq!(r.value, 5.0);
        assert!(r.residual < 1e-9);
    }

    #[test]
    fn sphere_distance_one() {
        // Chart point at spherical distance 1 from the south pole: |p| = tan(1/2).
        let sp = corpus::sphere_stereographic();
        let q = v2(0.5f64.tan(), 0.0);
        let r = distance_point(&sp, &v2(0.0, 0.0), &q, &DistanceOptions::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let s = distance_point(&sp, &v2(0.0, 0.0), &q, &DistanceOptions::shooting()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-8, "{}", s.value);
    }

    #[test]
    fn shooting_recovers_randers_asymmetry() {
        let rd = corpus::randers_plane();
        let o = DistanceOptions::shooting();
        let a = distance_point(&rd, &v2(0.0, 0.0), &v2(1.0, 0.0), &o).unwrap().value;
        let b = distance_point(&rd.reverse(), &v2(1.0, 0.0), &v2(0.0, 0.0), &o).unwrap().value;
        assert!((a - 1.5).abs() < 1e-8 && (b - 1.5).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn circle_distances() {
        let e2 = corpus::euclidean_plane();
        let c = corpus::circle(1.0);
        let o = DistanceOptions::default();
        let centre = distance_to_submanifold(&e2, &c, &v2(0.0, 0.0), &o).unwrap();
        assert!((centre.value - 1.0).abs() < 1e-12);
        assert!(centre.degenerate && centre.multiplicity > 1);
        let r = distance_to_submanifold(&e2, &c, &v2(0.5, 0.0), &o).unwrap();
        assert!((r.value - 0.5).abs() < 1e-10);
        assert_eq!(r.multiplicity, 1);
        assert!((&r.foot - v2(1.0, 0.0)).norm() < 1e-6);
        assert!(r.residual < 1e-6);
    }

    #[test]
    fn x32_curve_has_two_feet() {
        let e2 = corpus::euclidean_plane();
        let c = corpus::x32_curve();
        let q = v2(0.0, 0.1);
        let r = distance_to_submanifold(&e2, &c, &q, &DistanceOptions::default()).unwrap();
        assert_eq!(r.multiplicity, 2, "{:?}", r.clusters);
        // Oracle: dense scan of the explicit branch y = |x|^(3/2).
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=200_000 {
            let x = 0.1 * i as f64 / 200_000.0;
            let d = (x * x + (x.powf(1.5) - 0.1).powi(2)).sqrt();
            if d < best.0 {
                best = (d, x);
            }
        }
        assert!((r.value - best.0).abs() < 1e-8);
        let xs: Vec<f64> = r.clusters.iter().map(|c| c.foot[0]).collect();
        assert!((xs[0] + xs[1]).abs() < 1e-6 && (xs[0].abs() - best.1).abs() < 1e-5, "{xs:?}");
    }
}
