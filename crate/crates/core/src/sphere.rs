//! The comparison function `ct_lambda` and the curvature bound for small
//! backward spheres.
//!
//! A backward sphere `S-(q, r) = {x : d(x, q) = r}` is the forward sphere of
//! the reverse metric, so it is traced by reverse-metric geodesics from `q`.
//! Its principal curvatures along the inward normal are compared with
//! `ct_lambda(r)`, where `lambda` bounds the flag curvature from above.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::cut::{cut_times, sample_normals, CutOptions};
use crate::error::{Error, Result};
use crate::geodesic::{accurate_options, flag_curvature_raw, nonlinear_connection, variational_frame, JacobiFrame};
use crate::metric::{Metric, TangentVector};
use crate::ode::Termination;
use crate::submanifold::{shape_operator, Immersion, NormalVector, Submanifold};
use crate::{Matrix, Vector};

/// `ct_lambda(r)`: `sqrt(l) cot(sqrt(l) r)`, `1 / r` or `sqrt(-l) coth(sqrt(-l) r)`.
pub fn ct_lambda(lambda: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("ct_lambda needs r > 0 and finite lambda, got ({lambda}, {r})")));
    }
    if lambda > 0.0 {
        let s = lambda.sqrt();
        if s * r >= PI {
            return Err(Error::PoleCrossing { value: s * r });
        }
        Ok(s / (s * r).tan())
    } else if lambda == 0.0 {
        Ok(1.0 / r)
    } else {
        let s = (-lambda).sqrt();
        Ok(s / (s * r).tanh())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonBound {
    pub lambda: f64,
    pub r: f64,
    pub ct_value: f64,
}

impl ComparisonBound {
    pub fn new(lambda: f64, r: f64) -> Result<Self> {
        Ok(Self { lambda, r, ct_value: ct_lambda(lambda, r)? })
    }
}

/// Largest `r` with `ct_lambda(r) >= target`, by bisection (`ct` decreases in `r`).
pub fn radius_for_ct(lambda: f64, target: f64) -> Result<f64> {
    let mut hi = if lambda > 0.0 { PI / lambda.sqrt() * (1.0 - 1e-12) } else { 1.0 / target.max(1e-12) + 1.0 };
    while lambda <= 0.0 && ct_lambda(lambda, hi)? > target {
        hi *= 2.0;
    }
    let mut lo = hi * 1e-12;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ct_lambda(lambda, mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `S-(q, r)` in a two-dimensional chart, parametrized by the angle of the
/// initial reverse-metric velocity at `q`.
#[derive(Debug, Clone)]
pub struct BackwardSphere {
    reversed: Metric,
    q: Vector,
    r: f64,
}

const SECOND_STEP: f64 = 1e-4;

impl BackwardSphere {
    pub fn new(m: &Metric, q: &Vector, r: f64) -> Result<Self> {
        if m.dim() != 2 {
            return Err(Error::Unsupported(format!("backward spheres in dimension {}", m.dim())));
        }
        if !m.contains(q) {
            return Err(Error::OutsideChart { point: q.iter().copied().collect() });
        }
        Ok(Self { reversed: m.reverse(), q: q.clone(), r })
    }

    /// Unit reverse-metric velocity at `q` for angle `theta`, and its
    /// derivative in `theta`.
    fn initial(&self, theta: f64) -> (Vector, Vector) {
        let e = Vector::from_vec(vec![theta.cos(), theta.sin()]);
        let de = Vector::from_vec(vec![-theta.sin(), theta.cos()]);
        let f = self.reversed.norm(&self.q, &e);
        let l = self.reversed.legendre_raw(&self.q, &e);
        let y = &e / f;
        let dy = &de / f - &e * (l.dot(&de) / (f * f * f));
        (y, dy)
    }

    fn frame(&self, theta: f64) -> JacobiFrame {
        let (y, dy) = self.initial(theta);
        variational_frame(&self.reversed, &self.q, &y, &[Vector::zeros(2)], &[dy], self.r, &accurate_options(&self.reversed))
    }

    /// Point, tangent `dx/dtheta` and reverse velocity at `x`.
    fn data(&self, theta: f64) -> (Vector, Vector, Vector) {
        let f = self.frame(theta);
        (f.point_at(self.r), f.fields_at(self.r).remove(0), f.velocity_at(self.r))
    }

    /// The inward unit normal `-ybar(r)` at angle `theta`.
    pub fn inward_normal(&self, theta: f64) -> NormalVector {
        let (x, _, ybar) = self.data(theta);
        NormalVector { u: vec![theta], vector: TangentVector::new(x, -ybar), side: None }
    }

    /// `gbar(DJ, J) / gbar(J, J)` at `x(theta)` for the radial variation field.
    pub fn jacobi_curvature(&self, theta: f64) -> f64 {
        let f = self.frame(theta);
        let x = f.point_at(self.r);
        let y = f.velocity_at(self.r);
        let j = f.fields_at(self.r).remove(0);
        let jdot = f.field_rates_at(self.r).remove(0);
        let dj = jdot + nonlinear_connection(&self.reversed, &x, &y) * &j;
        let g = self.reversed.fundamental(&x, &y);
        dj.dot(&(&g * &j)) / j.dot(&(&g * &j))
    }

    fn reaches(&self, theta: f64) -> bool {
        let f = self.frame(theta);
        f.terminated_by() == Termination::TimeEnd
    }
}

impl Immersion for BackwardSphere {
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
        self.data(u[0]).0
    }
    fn tangent_frame(&self, u: &[f64]) -> Matrix {
        let t = self.data(u[0]).1;
        Matrix::from_column_slice(2, 1, t.as_slice())
    }
    fn second_derivative(&self, u: &[f64], _a: usize, _b: usize) -> Vector {
        let h = SECOND_STEP;
        (self.data(u[0] + h).1 - self.data(u[0] - h).1) / (2.0 * h)
    }
}

#[derive(Debug, Clone)]
pub struct BackwardSphereReport {
    pub q: Vector,
    pub r: f64,
    /// Largest sampled flag curvature on the ball.
    pub lambda_est: f64,
    /// Base points and flags per point used for `lambda_est`.
    pub lambda_resolution: (usize, usize),
    pub ct_value: f64,
    pub kappas: Vec<f64>,
    pub min_kappa: f64,
    pub max_kappa: f64,
    /// `min_kappa - ct_value`.
    pub margin: f64,
    /// `max |Abar_{-n} + A_n|` over the samples.
    pub sign_law_residual: f64,
    /// `max |kappa - gbar(DJ, J) / gbar(J, J)|` over the samples.
    pub jacobi_residual: f64,
    /// Estimated `min(forward, backward)` injectivity radius at `q`.
    pub injectivity_bound: f64,
}

impl BackwardSphereReport {
    /// `min_kappa >= ct_value - tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.min_kappa >= self.ct_value - tol
    }

    pub fn csv_row(&self) -> String {
        let q: Vec<String> = self.q.iter().map(|c| format!("{c}")).collect();
        format!(
            "{},{},{:.9e},{:.9e},{:.9e},{:.9e}",
            q.join(" "),
            self.r,
            self.lambda_est,
            self.ct_value,
            self.min_kappa,
            self.margin
        )
    }
}

/// Lower bound for the forward and backward injectivity radii at `q`, from
/// radial cut-time probes of the point `{q}` in `F` and in the reverse metric.
pub fn point_injectivity_bound(m: &Metric, q: &Vector, probes: usize, t_max: f64) -> Result<f64> {
    let point = Submanifold::new("center", crate::submanifold::PointSet { point: q.iter().copied().collect() });
    let opts = CutOptions { classify: false, t_max: Some(t_max), ..CutOptions::default() };
    let mut bound = f64::INFINITY;
    for metric in [m.clone(), m.reverse()] {
        let normals = sample_normals(&metric, &point, probes)?;
        for s in cut_times(&metric, &point, &normals, &opts)? {
            bound = bound.min(s.rho.lower_bound());
        }
    }
    Ok(bound)
}

/// Largest sampled flag curvature over the backward ball `B-(q, r)`:
/// the center and 24 points on three radii, eight flags each.
pub fn sampled_flag_curvature_max(m: &Metric, sphere_at: &dyn Fn(f64) -> BackwardSphere, r: f64) -> (f64, (usize, usize)) {
    let mut bases = Vec::new();
    let center = sphere_at(r).q.clone();
    bases.push(center);
    for k in 1..=3 {
        let s = sphere_at(r * k as f64 / 3.0);
        for i in 0..8 {
            bases.push(s.point(&[2.0 * PI * i as f64 / 8.0]));
        }
    }
    let lambda = bases
        .par_iter()
        .map(|x| {
            (0..8)
                .filter_map(|i| {
                    let a = PI * i as f64 / 8.0;
                    let v = Vector::from_vec(vec![a.cos(), a.sin()]);
                    let w = Vector::from_vec(vec![-a.sin(), a.cos()]);
                    flag_curvature_raw(m, x, &v, &w)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    (lambda, (bases.len(), 8))
}

/// Check `min kappa >= ct_lambda(r) - tol` on `S-(q, r)` with `sample_count`
/// points, where `lambda` is the sampled flag-curvature maximum.
pub fn backward_sphere_curvature_check(m: &Metric, q: &Vector, r: f64, sample_count: usize) -> Result<BackwardSphereReport> {
    let sphere = BackwardSphere::new(m, q, r)?;
    let injectivity_bound = point_injectivity_bound(m, q, 8, (4.0 * r).max(1.0))?;
    if r >= injectivity_bound {
        return Err(Error::RadiusTooLarge { radius: r, bound: injectivity_bound });
    }
    let thetas: Vec<f64> = (0..sample_count).map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / sample_count as f64).collect();
    if let Some(t) = thetas.iter().find(|t| !sphere.reaches(**t)) {
        return Err(Error::OutsideDomain { t_exit: sphere.frame(*t).t_end(), t_target: r });
    }
    let sub = Submanifold::new(format!("S-({:?}, {r})", q.as_slice()), sphere.clone());
    let reversed = m.reverse();
    let rows: Vec<(f64, f64, f64)> = thetas
        .par_iter()
        .map(|&theta| {
            let normal = sphere.inward_normal(theta);
            let a = shape_operator(m, &sub, &normal)?;
            let mut flipped = normal.clone();
            flipped.vector.components = -&normal.vector.components;
            let abar = shape_operator(&reversed, &sub, &flipped)?;
            let kappa = a.matrix[(0, 0)];
            let sign = (abar.matrix[(0, 0)] + kappa).abs();
            let jac = (sphere.jacobi_curvature(theta) - kappa).abs();
            Ok((kappa, sign, jac))
        })
        .collect::<Result<_>>()?;
    let (lambda_est, lambda_resolution) = {
        let make = |s: f64| BackwardSphere { reversed: reversed.clone(), q: q.clone(), r: s };
        sampled_flag_curvature_max(m, &make, r)
    };
    let ct_value = ct_lambda(lambda_est, r)?;
    let kappas: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let min_kappa = kappas.iter().copied().fold(f64::INFINITY, f64::min);
    let max_kappa = kappas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BackwardSphereReport {
        q: q.clone(),
        r,
        lambda_est,
        lambda_resolution,
        ct_value,
        min_kappa,
        max_kappa,
        margin: min_kappa - ct_value,
        sign_law_residual: rows.iter().map(|r| r.1).fold(0.0, f64::max),
        jacobi_residual: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        kappas,
        injectivity_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn ct_examples() {
        assert_eq!(ct_lambda(0.0, 0.25).unwrap(), 4.0);
        assert!((ct_lambda(1.0, PI / 4.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((ct_lambda(-1.0, 1.0).unwrap() - 1.0 / 1f64.tanh()).abs() < 1e-15);
        assert!(matches!(ct_lambda(1.0, 3.2), Err(Error::PoleCrossing { .. })));
        let r10 = radius_for_ct(1.0, 10.0).unwrap();
        assert!((ct_lambda(1.0, r10).unwrap() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn euclidean_backward_circle() {
        let e2 = corpus::euclidean_plane();
        let rep = backward_sphere_curvature_check(&e2, &Vector::from_vec(vec![0.3, -0.2]), 0.5, 12).unwrap();
        assert_eq!(rep.lambda_est, 0.0);
        assert!((rep.min_kappa - 2.0).abs() < 1e-6 && (rep.max_kappa - 2.0).abs() < 1e-6);
        assert!(rep.sign_law_residual < 1e-6 && rep.jacobi_residual < 1e-6);
    }

    #[test]
    fn randers_backward_circle_point() {
        // Backward sphere of RD about 0: points x with F(x, -x) = r.
        let rd = corpus::randers_plane();
        let q = Vector::from_vec(vec![0.0, 0.0]);
        let s = BackwardSphere::new(&rd, &q, 0.3).unwrap();
        for theta in [0.0, 1.0, 2.5] {
            let x = s.point(&[theta]);
            assert!((rd.norm(&x, &(&q - &x)) - 0.3).abs() < 1e-10);
        }
    }
}
