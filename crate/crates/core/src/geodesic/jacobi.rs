//! Jacobi fields along geodesics.
//!
//! Two formulations are provided. [`jacobi_field`] integrates the curvature
//! form `D^2 J = R(g', J) g'` together with the geodesic. [`variational_frame`]
//! integrates the linearized geodesic equation, which yields the same fields
//! (variation fields of geodesic variations) more cheaply and is used for
//! focal-point searches.

use crate::error::{Error, Result};
use crate::metric::{Metric, TangentVector};
use crate::ode::{self, OdeOptions, Solution, Termination};
use crate::submanifold::{self, NormalVector, Submanifold};
use crate::{Matrix, Vector};

use super::{curvature, geodesic, nonlinear_connection, spray, spray_dx, GeodesicRecord};

/// Jacobi field samples at the integrator nodes.
#[derive(Debug, Clone)]
pub struct JacobiRecord {
    pub times: Vec<f64>,
    pub j_values: Vec<Vector>,
    pub dj_values: Vec<Vector>,
    pub along: GeodesicRecord,
    solution: Solution,
    dim: usize,
}

impl JacobiRecord {
    pub fn j_at(&self, t: f64) -> Vector {
        self.solution.eval(t).rows(2 * self.dim, self.dim).into_owned()
    }

    pub fn dj_at(&self, t: f64) -> Vector {
        self.solution.eval(t).rows(3 * self.dim, self.dim).into_owned()
    }

    pub fn t_end(&self) -> f64 {
        self.solution.t_end()
    }
}

/// Jacobi field along the geodesic with initial velocity `v0`, with
/// `J(0) = j0` and `DJ(0) = dj0`, covariant derivatives taken with reference
/// `g'`.
pub fn jacobi_field(
    m: &Metric,
    v0: &TangentVector,
    t_end: f64,
    j0: &Vector,
    dj0: &Vector,
    opts: &OdeOptions,
) -> Result<JacobiRecord> {
    m.eval_f(v0)?;
    let n = m.dim();
    if j0.len() != n || dj0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: j0.len().min(dj0.len()) });
    }
    let mut z0 = Vector::zeros(4 * n);
    z0.rows_mut(0, n).copy_from(&v0.point);
    z0.rows_mut(n, n).copy_from(&v0.components);
    z0.rows_mut(2 * n, n).copy_from(j0);
    z0.rows_mut(3 * n, n).copy_from(dj0);
    let rhs = |_t: f64, z: &Vector| {
        let x = z.rows(0, n).into_owned();
        let y = z.rows(n, n).into_owned();
        let j = z.rows(2 * n, n).into_owned();
        let k = z.rows(3 * n, n).into_owned();
        let nl = nonlinear_connection(m, &x, &y);
        let r = curvature(m, &x, &y, &y, &j, &y);
        let mut out = Vector::zeros(4 * n);
        out.rows_mut(0, n).copy_from(&y);
        out.rows_mut(n, n).copy_from(&(spray(m, &x, &y) * -2.0));
        out.rows_mut(2 * n, n).copy_from(&(&k - &nl * &j));
        out.rows_mut(3 * n, n).copy_from(&(r - &nl * &k));
        Some(out)
    };
    let inside = |z: &Vector| m.contains(&z.rows(0, n).into_owned());
    let sol = ode::integrate(rhs, inside, &z0, 0.0, t_end, opts);
    if sol.terminated_by == Termination::StepFailure {
        return Err(Error::StepFailure { t: sol.t_end(), reason: "Jacobi integration step underflow" });
    }
    let geo = Solution {
        times: sol.times.clone(),
        states: sol.states.iter().map(|s| s.rows(0, 2 * n).into_owned()).collect(),
        derivatives: sol.derivatives.iter().map(|s| s.rows(0, 2 * n).into_owned()).collect(),
        terminated_by: sol.terminated_by,
        rejected_steps: sol.rejected_steps,
    };
    Ok(JacobiRecord {
        times: sol.times.clone(),
        j_values: sol.states.iter().map(|s| s.rows(2 * n, n).into_owned()).collect(),
        dj_values: sol.states.iter().map(|s| s.rows(3 * n, n).into_owned()).collect(),
        along: GeodesicRecord::from_solution(geo, n),
        solution: sol,
        dim: n,
    })
}

/// N-Jacobi field along the N-geodesic with initial velocity `normal`, with
/// `J(0) = j0` tangent to N and `DJ(0) = -A_n(j0)`.
pub fn n_jacobi_field(
    m: &Metric,
    sub: &Submanifold,
    normal: &NormalVector,
    j0: &Vector,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<JacobiRecord> {
    let residual = submanifold::normal_residual(m, sub, normal);
    if residual > 1e-6 {
        return Err(Error::NotNormal { residual });
    }
    let dj0 = if sub.param_dim() == 0 {
        Vector::zeros(m.dim())
    } else {
        let shape = submanifold::shape_operator(m, sub, normal)?;
        -shape.apply(j0)?
    };
    jacobi_field(m, &normal.vector, t_end, j0, &dj0, opts)
}

/// A family of Jacobi fields along one geodesic, integrated through the
/// linearized geodesic equation `J'' = -2 (dG/dx J + N J')`.
#[derive(Debug, Clone)]
pub struct JacobiFrame {
    solution: Solution,
    dim: usize,
    count: usize,
}

impl JacobiFrame {
    pub fn t_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn terminated_by(&self) -> Termination {
        self.solution.terminated_by
    }

    pub fn times(&self) -> &[f64] {
        &self.solution.times
    }

    pub fn point_at(&self, t: f64) -> Vector {
        self.solution.eval(t).rows(0, self.dim).into_owned()
    }

    pub fn velocity_at(&self, t: f64) -> Vector {
        self.solution.eval(t).rows(self.dim, self.dim).into_owned()
    }

    /// Coordinate components of each field at `t`.
    pub fn fields_at(&self, t: f64) -> Vec<Vector> {
        let z = self.solution.eval(t);
        (0..self.count)
            .map(|a| z.rows(2 * self.dim + 2 * a * self.dim, self.dim).into_owned())
            .collect()
    }

    /// Coordinate time derivatives of each field at `t`.
    pub fn field_rates_at(&self, t: f64) -> Vec<Vector> {
        let z = self.solution.eval(t);
        (0..self.count)
            .map(|a| z.rows(2 * self.dim + (2 * a + 1) * self.dim, self.dim).into_owned())
            .collect()
    }

    /// Matrix whose columns are the fields followed by the velocity.
    pub fn matrix_with_velocity(&self, t: f64) -> Matrix {
        let z = self.solution.eval(t);
        let n = self.dim;
        let mut mat = Matrix::zeros(n, self.count + 1);
        for a in 0..self.count {
            mat.set_column(a, &z.rows(2 * n + 2 * a * n, n));
        }
        mat.set_column(self.count, &z.rows(n, n));
        mat
    }
}

/// Integrate the geodesic `(x0, y0)` with the Jacobi fields whose initial
/// values and coordinate rates are `j0s[a]` and `jdot0s[a]`.
pub fn variational_frame(
    m: &Metric,
    x0: &Vector,
    y0: &Vector,
    j0s: &[Vector],
    jdot0s: &[Vector],
    t_end: f64,
    opts: &OdeOptions,
) -> JacobiFrame {
    let n = m.dim();
    let count = j0s.len();
    let size = 2 * n + 2 * count * n;
    let mut z0 = Vector::zeros(size);
    z0.rows_mut(0, n).copy_from(x0);
    z0.rows_mut(n, n).copy_from(y0);
    for a in 0..count {
        z0.rows_mut(2 * n + 2 * a * n, n).copy_from(&j0s[a]);
        z0.rows_mut(2 * n + (2 * a + 1) * n, n).copy_from(&jdot0s[a]);
    }
    let rhs = |_t: f64, z: &Vector| {
        let x = z.rows(0, n).into_owned();
        let y = z.rows(n, n).into_owned();
        let gx = spray_dx(m, &x, &y);
        let nl = nonlinear_connection(m, &x, &y);
        let mut out = Vector::zeros(size);
        out.rows_mut(0, n).copy_from(&y);
        out.rows_mut(n, n).copy_from(&(spray(m, &x, &y) * -2.0));
        for a in 0..count {
            let j = z.rows(2 * n + 2 * a * n, n).into_owned();
            let jd = z.rows(2 * n + (2 * a + 1) * n, n).into_owned();
            out.rows_mut(2 * n + 2 * a * n, n).copy_from(&jd);
            out.rows_mut(2 * n + (2 * a + 1) * n, n).copy_from(&((&gx * &j + &nl * &jd) * -2.0));
        }
        Some(out)
    };
    let inside = |z: &Vector| m.contains(&z.rows(0, n).into_owned());
    let solution = ode::integrate(rhs, inside, &z0, 0.0, t_end, opts);
    JacobiFrame { solution, dim: n, count }
}

/// Central-difference variation of geodesics, used as an oracle in tests.
#[allow(dead_code)]
pub(crate) fn variation_oracle(m: &Metric, x0: &Vector, y0: &Vector, j0: &Vector, jdot0: &Vector, t: f64, h: f64) -> Vector {
    let opts = OdeOptions::with_tol(1e-12);
    let plus = geodesic(m, &(x0 + j0 * h), &(y0 + jdot0 * h), t, &opts);
    let minus = geodesic(m, &(x0 - j0 * h), &(y0 - jdot0 * h), t, &opts);
    (plus.point_at(t) - minus.point_at(t)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn flat_jacobi_field_is_linear() {
        let e2 = corpus::euclidean_plane();
        let rec = jacobi_field(
            &e2,
            &TangentVector::from_slices(&[0.0, 0.0], &[1.0, 0.0]),
            2.0,
            &v2(0.0, 0.0),
            &v2(0.0, 1.0),
            &OdeOptions::default(),
        )
        .unwrap();
        for t in [0.5, 1.0, 2.0] {
            assert!((rec.j_at(t) - v2(0.0, t)).norm() < 1e-9);
        }
    }

    #[test]
    fn sphere_jacobi_norm_is_sine() {
        let sp = corpus::sphere_stereographic();
        // Unit F-speed at the origin: F = 2|v|.
        let v0 = TangentVector::from_slices(&[0.0, 0.0], &[0.5, 0.0]);
        let rec = jacobi_field(&sp, &v0, 2.0, &v2(0.0, 0.0), &v2(0.0, 0.5), &OdeOptions::default()).unwrap();
        for t in [0.3, 1.0, 1.7] {
            let x = rec.along.point_at(t);
            let j = rec.j_at(t);
            let norm = sp.norm(&x, &j);
            assert!((norm - t.sin()).abs() < 1e-6, "t={t}: {norm}");
        }
    }

    #[test]
    fn curvature_form_matches_geodesic_variation() {
        let sp = corpus::sphere_stereographic();
        let x0 = v2(0.2, -0.1);
        let y0 = v2(0.3, 0.25);
        let j0 = v2(0.1, 0.05);
        let jdot0 = v2(-0.2, 0.3);
        let nl = nonlinear_connection(&sp, &x0, &y0);
        let dj0 = &jdot0 + &nl * &j0;
        let rec = jacobi_field(&sp, &TangentVector::new(x0.clone(), y0.clone()), 2.0, &j0, &dj0, &OdeOptions::default()).unwrap();
        let frame = variational_frame(&sp, &x0, &y0, &[j0.clone()], &[jdot0.clone()], 2.0, &OdeOptions::default());
        for t in [0.5, 1.2, 2.0] {
            let oracle = variation_oracle(&sp, &x0, &y0, &j0, &jdot0, t, 1e-5);
            assert!((rec.j_at(t) - &oracle).norm() < 1e-6, "curvature form at {t}");
            assert!((&frame.fields_at(t)[0] - &oracle).norm() < 1e-6, "variational form at {t}");
        }
    }
}
