//! Cut times of N-geodesics, focal times, the cut locus and the tubular
//! neighbourhood of a submanifold.
//!
//! The cut time of a unit normal `n` is the last `t` with `d(N, gamma_n(t)) = t`.
//! The set of such `t` is an interval starting at 0, so it is bracketed by
//! doubling and then bisected on the predicate `d(N, gamma_n(t)) < t - tol_d`.

mod tubular;

pub use tubular::{tubular_verify, TubularReport};

use rayon::prelude::*;

use crate::distance::{distance_to_submanifold, minimizer_clusters, submanifold_minima, DistanceOptions};
use crate::error::{Error, Result};
use crate::geodesic::{accurate_options, geodesic, nonlinear_connection, variational_frame, GeodesicRecord};
use crate::linalg::brent_minimize;
use crate::metric::{Metric, MetricKind, ConformalFactor};
use crate::ode::{OdeOptions, Termination};
use crate::submanifold::{
    annihilator_basis, hypersurface_normal, normal_cone_sample, shape_operator, CoOrientation, NormalVector, Submanifold,
};
use crate::{Matrix, Vector};

/// Why the cut time ends where it does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitingReason {
    /// Two or more N-segments reach the cut point.
    Separating,
    /// The cut point is a first focal point.
    Focal,
    /// The geodesic left the chart before the predicate fired.
    ChartExit,
    /// The predicate never fired before `t_max`.
    Horizon,
}

impl LimitingReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitingReason::Separating => "separating",
            LimitingReason::Focal => "focal",
            LimitingReason::ChartExit => "chart_exit",
            LimitingReason::Horizon => "horizon",
        }
    }
}

/// A cut time, or a lower bound when the search ran out of room.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CutTime {
    Finite(f64),
    /// `rho >= t`: horizon or chart exit reached at `t`.
    AtLeast(f64),
}

impl CutTime {
    pub fn finite(&self) -> Option<f64> {
        match self {
            CutTime::Finite(t) => Some(*t),
            CutTime::AtLeast(_) => None,
        }
    }

    /// The cut time, or its lower bound.
    pub fn lower_bound(&self) -> f64 {
        match self {
            CutTime::Finite(t) | CutTime::AtLeast(t) => *t,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CutOptions {
    /// Slack of the predicate `d(N, gamma(t)) < t - tol_d`.
    pub tol_d: f64,
    /// Final bisection bracket width.
    pub bracket: f64,
    /// First time tried by the doubling search.
    pub t_start: f64,
    /// Search horizon; defaults to ten times `max(1, diameter of N)`.
    pub t_max: Option<f64>,
    pub distance: DistanceOptions,
    /// Compute focal times and multiplicities to classify the cut point.
    pub classify: bool,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self { tol_d: 1e-5, bracket: 1e-6, t_start: 1e-3, t_max: None, distance: DistanceOptions::default(), classify: true }
    }
}

impl CutOptions {
    /// Tolerance for comparing a cut time with a focal time. The predicate
    /// fires late by `O(sqrt(tol_d))` when the distance function touches the
    /// diagonal tangentially, which is what happens at focal points.
    pub fn focal_tolerance(&self) -> f64 {
        (3.0 * self.bracket).max(3.0 * self.tol_d.sqrt())
    }

    fn horizon(&self, sub: &Submanifold) -> f64 {
        self.t_max.unwrap_or_else(|| 10.0 * sub.diameter().max(1.0))
    }
}

#[derive(Debug, Clone)]
pub struct CutSample {
    pub normal: NormalVector,
    pub rho: CutTime,
    pub cut_point: Option<Vector>,
    pub limiting_reason: LimitingReason,
    /// Final bracket `(t_lo, t_hi)`: the predicate is false at `t_lo` and
    /// true at `t_hi`.
    pub bracket: (f64, f64),
    pub focal_time: Option<f64>,
    /// Minimizer clusters at `gamma(t_hi)`.
    pub multiplicity: usize,
}

fn normal_geodesic(m: &Metric, normal: &NormalVector, t_max: f64) -> GeodesicRecord {
    geodesic(m, normal.point(), normal.direction(), t_max, &accurate_options(m))
}

/// `d(N, gamma(t)) < t - tol_d`. Points where the distance cannot be
/// evaluated count as "not yet cut".
fn cut_predicate(m: &Metric, sub: &Submanifold, rec: &GeodesicRecord, t: f64, opts: &CutOptions) -> bool {
    let q = rec.point_at(t);
    match submanifold_minima(m, sub, &q, &opts.distance) {
        Ok(r) => r.value() < t - opts.tol_d,
        Err(_) => false,
    }
}

/// Cut time of the unit normal `normal`.
pub fn cut_time(m: &Metric, sub: &Submanifold, normal: &NormalVector, opts: &CutOptions) -> Result<CutSample> {
    let t_max = opts.horizon(sub);
    let rec = normal_geodesic(m, normal, t_max);
    if rec.terminated_by == Termination::StepFailure {
        return Err(Error::StepFailure { t: rec.t_end(), reason: "normal geodesic step underflow" });
    }
    let t_end = rec.t_end();
    let mut lo = 0.0;
    let mut hi = None;
    let mut t = opts.t_start.min(t_end);
    loop {
        if cut_predicate(m, sub, &rec, t, opts) {
            hi = Some(t);
            break;
        }
        lo = t;
        if t >= t_end {
            break;
        }
        t = (2.0 * t).min(t_end);
    }
    let Some(mut hi) = hi else {
        let reason = if rec.terminated_by == Termination::ChartExit { LimitingReason::ChartExit } else { LimitingReason::Horizon };
        return Ok(CutSample {
            normal: normal.clone(),
            rho: CutTime::AtLeast(t_end),
            cut_point: None,
            limiting_reason: reason,
            bracket: (t_end, t_end),
            focal_time: None,
            multiplicity: 0,
        });
    };
    while hi - lo > opts.bracket {
        let mid = 0.5 * (lo + hi);
        if cut_predicate(m, sub, &rec, mid, opts) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    let cut_point = rec.point_at(rho);
    let (mut multiplicity, mut focal_time) = (1, None);
    let mut reason = LimitingReason::Separating;
    if opts.classify {
        let q = rec.point_at(hi);
        let minima = submanifold_minima(m, sub, &q, &opts.distance)?;
        let value_tol = 2.0 * opts.tol_d + (hi - lo);
        multiplicity = minimizer_clusters(m, sub, &q, &minima, value_tol, &opts.distance, false)?.len();
        // Focal analysis needs curvature; C1 points simply have none.
        focal_time = first_focal_time(m, sub, normal, t_max).ok().flatten();
        let focal = focal_time.is_some_and(|f| (rho - f).abs() <= opts.focal_tolerance());
        reason = if focal { LimitingReason::Focal } else { LimitingReason::Separating };
    }
    Ok(CutSample {
        normal: normal.clone(),
        rho: CutTime::Finite(rho),
        cut_point: Some(cut_point),
        limiting_reason: reason,
        bracket: (lo, hi),
        focal_time,
        multiplicity,
    })
}

/// Jacobi-field frame along the N-geodesic of `normal` whose determinant
/// (with the velocity appended) vanishes exactly at focal points.
fn focal_frame(m: &Metric, sub: &Submanifold, normal: &NormalVector) -> Result<(Vec<Vector>, Vec<Vector>)> {
    let p = normal.point();
    let n = normal.direction();
    let dim = m.dim();
    let nl = nonlinear_connection(m, p, n);
    let mut j0s = Vec::new();
    let mut jdot0s = Vec::new();
    if sub.param_dim() > 0 {
        let shape = shape_operator(m, sub, normal)?;
        for a in 0..sub.param_dim() {
            let w = shape.frame.column(a).into_owned();
            let dj = -shape.apply(&w)?;
            jdot0s.push(&dj - &nl * &w);
            j0s.push(w);
        }
    }
    // Variations of the normal inside the normal cone: J(0) = 0 and
    // DJ(0) = g_n^{-1} eta with eta annihilating T_pN and eta(n) = 0.
    let frame = if sub.param_dim() > 0 { sub.tangent_frame(&normal.u) } else { Matrix::zeros(dim, 0) };
    let ann = annihilator_basis(&frame);
    let g = m.fundamental(p, n);
    let ginv = g.try_inverse().ok_or_else(|| Error::InvalidInput("degenerate fundamental tensor".into()))?;
    let nn = n / n.norm();
    let mut kept: Vec<Vector> = Vec::new();
    for c in 0..ann.ncols() {
        let mut eta = ann.column(c).into_owned();
        eta -= &nn * nn.dot(&eta);
        for k in &kept {
            eta -= k * k.dot(&eta);
        }
        let len = eta.norm();
        if len > 1e-6 {
            kept.push(eta / len);
        }
    }
    for eta in kept.into_iter().take(dim - 1 - sub.param_dim()) {
        j0s.push(Vector::zeros(dim));
        jdot0s.push(&ginv * eta);
    }
    Ok((j0s, jdot0s))
}

/// First focal time along the N-geodesic of `normal`, searched on `(0, t_max]`.
pub fn first_focal_time(m: &Metric, sub: &Submanifold, normal: &NormalVector, t_max: f64) -> Result<Option<f64>> {
    let (j0s, jdot0s) = focal_frame(m, sub, normal)?;
    let frame = variational_frame(m, normal.point(), normal.direction(), &j0s, &jdot0s, t_max, &OdeOptions::with_tol(1e-11));
    if frame.terminated_by() == Termination::StepFailure {
        return Err(Error::StepFailure { t: frame.t_end(), reason: "Jacobi frame step underflow" });
    }
    let t_end = frame.t_end();
    let det = |t: f64| frame.matrix_with_velocity(t).determinant();
    // Determinant normalized by the column lengths, for detecting zeros
    // that do not change sign.
    let relative = |t: f64| {
        let mat = frame.matrix_with_velocity(t);
        let scale: f64 = mat.column_iter().map(|c| c.norm().max(1e-300)).product();
        mat.determinant().abs() / scale
    };
    let samples = 4000;
    let t0 = if sub.param_dim() + 1 < m.dim() { 1e-6 * t_end } else { 0.0 };
    let ts: Vec<f64> = (0..=samples).map(|i| t0 + (t_end - t0) * i as f64 / samples as f64).collect();
    let ds: Vec<f64> = ts.iter().map(|t| det(*t)).collect();
    let rs: Vec<f64> = ts.iter().map(|t| relative(*t)).collect();
    for i in 1..ts.len() {
        if ds[i] == 0.0 {
            return Ok(Some(ts[i]));
        }
        if ds[i - 1].signum() != ds[i].signum() && ds[i - 1] != 0.0 {
            let (mut a, mut b) = (ts[i - 1], ts[i]);
            let sa = ds[i - 1].signum();
            while b - a > 1e-12 * t_end.max(1.0) {
                let mid = 0.5 * (a + b);
                if det(mid).signum() == sa {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(Some(0.5 * (a + b)));
        }
        if i + 1 < ts.len() && rs[i] < 1e-3 && rs[i] <= rs[i - 1] && rs[i] <= rs[i + 1] {
            let (t, r) = brent_minimize(relative, ts[i - 1], ts[i + 1], 1e-12, 200);
            if r < 1e-7 {
                return Ok(Some(t));
            }
        }
    }
    Ok(None)
}

/// Unit normals sampled over N: both co-orientations of a hypersurface at
/// `count / 2` parameters, otherwise cone samples.
pub fn sample_normals(m: &Metric, sub: &Submanifold, count: usize) -> Result<Vec<NormalVector>> {
    let count = count.max(2);
    if sub.param_dim() + 1 == sub.ambient_dim() {
        let params = sub.sample_params(count.div_ceil(2));
        let mut out = Vec::with_capacity(2 * params.len());
        for u in &params {
            out.push(hypersurface_normal(m, sub, u, CoOrientation::Positive)?);
            out.push(hypersurface_normal(m, sub, u, CoOrientation::Negative)?);
        }
        return Ok(out);
    }
    let (params, per_point) = if sub.param_dim() == 0 { (sub.sample_params(1), count) } else { (sub.sample_params(count.div_ceil(8)), 8) };
    let mut out = Vec::new();
    for u in &params {
        out.extend(normal_cone_sample(m, sub, u, per_point)?);
    }
    Ok(out)
}

/// Cut times of many normals, in input order.
pub fn cut_times(m: &Metric, sub: &Submanifold, normals: &[NormalVector], opts: &CutOptions) -> Result<Vec<CutSample>> {
    normals.par_iter().map(|n| cut_time(m, sub, n, opts)).collect()
}

#[derive(Debug, Clone)]
pub struct InjectivityReport {
    /// `min` over samples of the cut time (or its lower bound).
    pub value: f64,
    /// Index of the minimizing sample.
    pub argmin: usize,
    pub samples: Vec<CutSample>,
    /// True when the minimum comes from a lower bound only.
    pub bound_only: bool,
}

impl InjectivityReport {
    pub fn minimizing(&self) -> &CutSample {
        &self.samples[self.argmin]
    }
}

/// `Inj+(N)` estimated over `sample_count` unit normals.
pub fn inj_radius_submanifold(m: &Metric, sub: &Submanifold, sample_count: usize, opts: &CutOptions) -> Result<InjectivityReport> {
    if !sub.is_compact() {
        return Err(Error::InvalidInput(format!("{} is not compact", sub.name())));
    }
    let normals = sample_normals(m, sub, sample_count)?;
    let samples = cut_times(m, sub, &normals, opts)?;
    injectivity_from_samples(samples)
}

pub fn injectivity_from_samples(samples: Vec<CutSample>) -> Result<InjectivityReport> {
    let (argmin, best) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.rho.lower_bound().total_cmp(&b.1.rho.lower_bound()))
        .ok_or_else(|| Error::InvalidInput("no normals sampled".into()))?;
    Ok(InjectivityReport {
        value: best.rho.lower_bound(),
        argmin,
        bound_only: best.rho.finite().is_none(),
        samples,
    })
}

#[derive(Debug, Clone)]
pub struct CutLocusCloud {
    pub samples: Vec<CutSample>,
    /// Cut points of the samples with a finite cut time.
    pub points: Vec<Vector>,
    /// Estimate of `d(N, Cu(N))`: the smallest `d(N, x)` over the cloud.
    pub distance_to_n: f64,
    /// `d(N, x) > 0` for every cloud point.
    pub disjoint: bool,
    pub injectivity: f64,
}

impl CutLocusCloud {
    /// Rows `u..., n..., rho, cut_point..., reason`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(s) = self.samples.first() {
            let k = s.normal.u.len();
            let d = s.normal.direction().len();
            let mut head: Vec<String> = (0..k).map(|i| format!("u{}", i + 1)).collect();
            head.extend((0..d).map(|i| format!("n{}", i + 1)));
            head.push("rho".into());
            head.extend((0..d).map(|i| format!("x{}", i + 1)));
            head.push("reason".into());
            out.push_str(&head.join(","));
            out.push('\n');
        }
        for s in &self.samples {
            let mut row: Vec<String> = s.normal.u.iter().map(|v| format!("{v:.12e}")).collect();
            row.extend(s.normal.direction().iter().map(|v| format!("{v:.12e}")));
            match (&s.rho, &s.cut_point) {
                (CutTime::Finite(r), Some(p)) => {
                    row.push(format!("{r:.12e}"));
                    row.extend(p.iter().map(|v| format!("{v:.12e}")));
                }
                (rho, _) => {
                    row.push(format!(">={:.12e}", rho.lower_bound()));
                    row.extend(s.normal.direction().iter().map(|_| String::new()));
                }
            }
            row.push(s.limiting_reason.as_str().into());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Cut points over `normal_sample_count` unit normals.
pub fn cut_locus_sample(m: &Metric, sub: &Submanifold, normal_sample_count: usize, opts: &CutOptions) -> Result<CutLocusCloud> {
    let inj = inj_radius_submanifold(m, sub, normal_sample_count, opts)?;
    let points: Vec<Vector> = inj.samples.iter().filter_map(|s| s.cut_point.clone()).collect();
    let dists: Vec<f64> = points
        .par_iter()
        .map(|x| submanifold_minima(m, sub, x, &opts.distance).map(|r| r.value()))
        .collect::<Result<_>>()?;
    let distance_to_n = dists.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(CutLocusCloud {
        disjoint: dists.iter().all(|d| *d > 0.0),
        points,
        distance_to_n,
        injectivity: inj.value,
        samples: inj.samples,
    })
}

#[derive(Debug, Clone)]
pub struct SeparatingPoint {
    pub point: Vector,
    pub multiplicity: usize,
    pub degenerate: bool,
    pub feet: Vec<Vector>,
}

/// The query points reached by at least two N-segments.
pub fn separating_points(m: &Metric, sub: &Submanifold, queries: &[Vector], opts: &DistanceOptions) -> Result<Vec<SeparatingPoint>> {
    let results: Vec<Option<SeparatingPoint>> = queries
        .par_iter()
        .map(|q| {
            let r = distance_to_submanifold(m, sub, q, opts)?;
            Ok((r.multiplicity >= 2).then(|| SeparatingPoint {
                point: q.clone(),
                multiplicity: r.multiplicity,
                degenerate: r.degenerate,
                feet: r.clusters.iter().map(|c| c.foot.clone()).collect(),
            }))
        })
        .collect::<Result<_>>()?;
    Ok(results.into_iter().flatten().collect())
}

#[derive(Debug, Clone)]
pub struct SingletonCheck {
    pub unique: bool,
    pub distance: f64,
    /// Foot points of the minimizer clusters.
    pub witnesses: Vec<Vector>,
    pub witness_params: Vec<Vec<f64>>,
}

/// Whether the backward sphere `S-(q, d(N, q))` meets N in a single point:
/// all minimizers of `x -> d(x, q)` on N within `tol` of the minimum are
/// clustered.
pub fn singleton_intersection_check(m: &Metric, sub: &Submanifold, q: &Vector, tol: f64, opts: &DistanceOptions) -> Result<SingletonCheck> {
    let minima = submanifold_minima(m, sub, q, opts)?;
    let clusters = minimizer_clusters(m, sub, q, &minima, tol, opts, !minima.degenerate)?;
    Ok(SingletonCheck {
        unique: clusters.len() == 1 && !minima.degenerate,
        distance: minima.value(),
        witnesses: clusters.iter().map(|c| c.foot.clone()).collect(),
        witness_params: clusters.iter().map(|c| c.u.clone()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereCondition {
    pub interior: bool,
    pub exterior: bool,
    /// Largest interior radius at the point (a lower bound if not finite).
    pub interior_radius: f64,
    pub exterior_radius: f64,
}

fn require_euclidean_plane(m: &Metric, sub: &Submanifold) -> Result<()> {
    let flat = matches!(m.kind(), MetricKind::Conformal(ConformalFactor::Constant(c)) if *c == 1.0);
    if !flat || m.dim() != 2 {
        return Err(Error::NotPlanar(format!("metric {} is not the Euclidean plane", m.name())));
    }
    sub.signed_area().map(|_| ())
}

/// Interior and exterior sphere conditions of radius `r` at `x(u)` for a
/// closed curve in the Euclidean plane. The interior radius is the cut
/// time of the inward normal.
pub fn sphere_condition(m: &Metric, sub: &Submanifold, u: &[f64], r: f64, opts: &CutOptions) -> Result<SphereCondition> {
    require_euclidean_plane(m, sub)?;
    let inward = sub.inward()?;
    let quick = CutOptions { classify: false, ..opts.clone() };
    let inner = cut_time(m, sub, &hypersurface_normal(m, sub, u, inward)?, &quick)?.rho.lower_bound();
    let outer = cut_time(m, sub, &hypersurface_normal(m, sub, u, inward.flip())?, &quick)?.rho.lower_bound();
    Ok(SphereCondition { interior: inner >= r, exterior: outer >= r, interior_radius: inner, exterior_radius: outer })
}

/// Uniform sphere conditions: infimum of the radii over `samples` points.
pub fn uniform_sphere_condition(m: &Metric, sub: &Submanifold, r: f64, samples: usize, opts: &CutOptions) -> Result<SphereCondition> {
    require_euclidean_plane(m, sub)?;
    let conds: Vec<SphereCondition> = sub
        .sample_params(samples)
        .par_iter()
        .map(|u| sphere_condition(m, sub, u, r, opts))
        .collect::<Result<_>>()?;
    let inner = conds.iter().map(|c| c.interior_radius).fold(f64::INFINITY, f64::min);
    let outer = conds.iter().map(|c| c.exterior_radius).fold(f64::INFINITY, f64::min);
    Ok(SphereCondition { interior: inner >= r, exterior: outer >= r, interior_radius: inner, exterior_radius: outer })
}

/// One level of the interior-radius refinement study at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusStudyLevel {
    pub spacing: f64,
    pub u: f64,
    pub radius: f64,
}

/// Interior radius at the sample nearest to `u0` on the offset grids with
/// spacing `h0 / 2^k`, `k = 0..levels`. At a C1 point the radii go to zero.
pub fn interior_radius_study(m: &Metric, sub: &Submanifold, u0: f64, h0: f64, levels: usize, opts: &CutOptions) -> Result<Vec<RadiusStudyLevel>> {
    (0..levels)
        .map(|k| {
            let h = h0 / 2f64.powi(k as i32);
            let u = u0 + 0.5 * h;
            let cond = sphere_condition(m, sub, &[u], 0.0, opts)?;
            Ok(RadiusStudyLevel { spacing: h, u, radius: cond.interior_radius })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FrontCone {
    pub points: Vec<Vector>,
    pub normals: Vec<NormalVector>,
    /// `max |d(N, x) - r|` over the points.
    pub level_error: f64,
    pub min_separation: f64,
    pub distinct: bool,
}

/// The front `exp(r v)` over the unit normals `v` at `x(u)`, for
/// `r < inj_bound`.
pub fn front_cone_sample(
    m: &Metric,
    sub: &Submanifold,
    u: &[f64],
    r: f64,
    inj_bound: f64,
    cone_samples: usize,
    opts: &DistanceOptions,
) -> Result<FrontCone> {
    if !(r > 0.0) || r >= inj_bound {
        return Err(Error::RadiusBeyondInjectivity { radius: r, bound: inj_bound });
    }
    let normals = normal_cone_sample(m, sub, u, cone_samples)?;
    let points: Vec<Vector> = normals
        .iter()
        .map(|n| {
            let rec = normal_geodesic(m, n, r);
            if rec.reaches(r) {
                Ok(rec.end_point().clone())
            } else {
                Err(Error::OutsideDomain { t_exit: rec.t_end(), t_target: r })
            }
        })
        .collect::<Result<_>>()?;
    let level_error = points
        .par_iter()
        .map(|x| submanifold_minima(m, sub, x, opts).map(|d| (d.value() - r).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut min_separation = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..i {
            min_separation = min_separation.min((&points[i] - &points[j]).norm());
        }
    }
    Ok(FrontCone { distinct: min_separation > 1e-9, points, normals, level_error, min_separation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn circle_inward_cut_is_focal_at_one() {
        let e2 = corpus::euclidean_plane();
        let c = corpus::circle(1.0);
        let n = hypersurface_normal(&e2, &c, &[0.3], c.inward().unwrap()).unwrap();
        let s = cut_time(&e2, &c, &n, &CutOptions::default()).unwrap();
        let rho = s.rho.finite().unwrap();
        assert!((rho - 1.0).abs() < 1e-3, "{rho}");
        assert_eq!(s.limiting_reason, LimitingReason::Focal);
        assert!(s.cut_point.unwrap().norm() < 1e-3);
        let f = s.focal_time.unwrap();
        assert!((f - 1.0).abs() < 1e-8, "{f}");
    }

    #[test]
    fn circle_outward_is_horizon_limited() {
        let e2 = corpus::euclidean_plane();
        let c = corpus::circle(1.0);
        let n = hypersurface_normal(&e2, &c, &[0.3], c.inward().unwrap().flip()).unwrap();
        let s = cut_time(&e2, &c, &n, &CutOptions::default()).unwrap();
        assert_eq!(s.limiting_reason, LimitingReason::Horizon);
        assert_eq!(s.rho, CutTime::AtLeast(20.0));
    }

    #[test]
    fn line_has_no_focal_point() {
        let e2 = corpus::euclidean_plane();
        let line = corpus::x_axis();
        let n = hypersurface_normal(&e2, &line, &[0.5], CoOrientation::Positive).unwrap();
        assert_eq!(first_focal_time(&e2, &line, &n, 5.0).unwrap(), None);
    }

    #[test]
    fn sphere_equator_focuses_at_quarter_circle() {
        let sp = corpus::sphere_stereographic();
        let eq = corpus::equator();
        let n = hypersurface_normal(&sp, &eq, &[1.0], eq.inward().unwrap()).unwrap();
        let f = first_focal_time(&sp, &eq, &n, 3.0).unwrap().unwrap();
        assert!((f - std::f64::consts::FRAC_PI_2).abs() < 1e-7, "{f}");
    }

    #[test]
    fn point_in_plane_has_no_focal_point() {
        let e2 = corpus::euclidean_plane();
        let p = corpus::point(&[0.2, 0.1]);
        let normals = sample_normals(&e2, &p, 8).unwrap();
        assert_eq!(normals.len(), 8);
        assert_eq!(first_focal_time(&e2, &p, &normals[0], 4.0).unwrap(), None);
    }

    #[test]
    fn separating_queries() {
        let e2 = corpus::euclidean_plane();
        let c = corpus::circle(1.0);
        let found = separating_points(&e2, &c, &[v2(0.0, 0.0), v2(0.5, 0.0)], &DistanceOptions::default()).unwrap();
        assert_eq!(found.len(), 1);
        assert!(found[0].degenerate);
    }

    #[test]
    fn front_of_circle_point() {
        let e2 = corpus::euclidean_plane();
        let c = corpus::circle(1.0);
        let front = front_cone_sample(&e2, &c, &[0.0], 0.3, 1.0, 2, &DistanceOptions::default()).unwrap();
        let mut xs: Vec<f64> = front.points.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] - 0.7).abs() < 1e-9 && (xs[1] - 1.3).abs() < 1e-9);
        assert!(front.level_error < 1e-9);
        assert!(matches!(
            front_cone_sample(&e2, &c, &[0.0], 1.5, 1.0, 2, &DistanceOptions::default()),
            Err(Error::RadiusBeyondInjectivity { .. })
        ));
    }

    #[test]
    fn ellipse_sphere_condition_at_vertex() {
        let e2 = corpus::euclidean_plane();
        let el = corpus::ellipse(2.0, 1.0);
        let c = sphere_condition(&e2, &el, &[0.0], 0.4, &CutOptions::default()).unwrap();
        assert!(c.interior && c.exterior);
        assert!((c.interior_radius - 0.5).abs() < 5e-3, "{}", c.interior_radius);
        let c = sphere_condition(&e2, &el, &[0.0], 0.6, &CutOptions::default()).unwrap();
        assert!(!c.interior);
        assert!(matches!(
            sphere_condition(&corpus::randers_plane(), &el, &[0.0], 0.4, &CutOptions::default()),
            Err(Error::NotPlanar(_))
        ));
    }
}
