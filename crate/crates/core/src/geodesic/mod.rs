//! Geodesic spray, geodesic integration and the exponential map.
//!
//! Geodesics solve `x'' + 2 G(x, x') = 0` with the spray
//! `G^i = 1/4 g^{il} (y^k d^2(F^2)/dx^k dy^l - d(F^2)/dx^l)`.

mod connection;
mod jacobi;

pub use connection::{
    chern, chern_coefficients, covariant_derivative, curvature, curvature_tensor, curvature_with_field, flag_curvature,
    flag_curvature_raw,
};
pub use jacobi::{jacobi_field, n_jacobi_field, variational_frame, JacobiFrame, JacobiRecord};

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::metric::{Metric, TangentVector};
use crate::ode::{self, OdeOptions, Solution, Termination};
use crate::{Matrix, Vector};

const FD_SPRAY: f64 = 1e-3;

/// Spray coefficients `G^i(x, y)` on raw coordinates.
pub fn spray(m: &Metric, x: &Vector, y: &Vector) -> Vector {
    if let Some(g) = m.analytic_spray(x, y) {
        return g;
    }
    let g = m.fundamental(x, y);
    let mixed = m.energy_dxdy(x, y);
    let rhs = mixed.transpose() * y - m.energy_dx(x, y);
    match g.cholesky() {
        Some(ch) => ch.solve(&rhs) * 0.25,
        None => Vector::from_element(m.dim(), f64::NAN),
    }
}

/// Spray coefficients at a tangent vector.
pub fn spray_coefficients(m: &Metric, v: &TangentVector) -> Result<Vector> {
    m.eval_f(v)?;
    Ok(spray(m, &v.point, &v.components))
}

/// Nonlinear connection `N^i_j = dG^i/dy^j`.
pub fn nonlinear_connection(m: &Metric, x: &Vector, y: &Vector) -> Matrix {
    if let Some(n) = m.analytic_nonlinear_connection(x, y) {
        return n;
    }
    let n = m.dim();
    let h = FD_SPRAY * y.norm();
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let mut yp = y.clone();
        let mut ym = y.clone();
        yp[j] += h;
        ym[j] -= h;
        let col = (spray(m, x, &yp) - spray(m, x, &ym)) / (2.0 * h);
        out.set_column(j, &col);
    }
    out
}

/// Position derivatives `dG^i/dx^k`.
pub fn spray_dx(m: &Metric, x: &Vector, y: &Vector) -> Matrix {
    if let Some(d) = m.analytic_spray_dx(x, y) {
        return d;
    }
    let n = m.dim();
    let h = FD_SPRAY * x.norm().max(1.0);
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let col = (spray(m, &xp, y) - spray(m, &xm, y)) / (2.0 * h);
        out.set_column(k, &col);
    }
    out
}

/// Dense output of an integrated geodesic.
#[derive(Debug, Clone)]
pub struct GeodesicRecord {
    pub times: Vec<f64>,
    pub points: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub terminated_by: Termination,
    solution: Solution,
    dim: usize,
}

impl GeodesicRecord {
    fn from_solution(solution: Solution, dim: usize) -> Self {
        let points = solution.states.iter().map(|s| s.rows(0, dim).into_owned()).collect();
        let velocities = solution.states.iter().map(|s| s.rows(dim, dim).into_owned()).collect();
        Self {
            times: solution.times.clone(),
            points,
            velocities,
            terminated_by: solution.terminated_by,
            solution,
            dim,
        }
    }

    pub fn t_end(&self) -> f64 {
        self.solution.t_end()
    }

    pub fn point_at(&self, t: f64) -> Vector {
        self.solution.eval(t).rows(0, self.dim).into_owned()
    }

    pub fn velocity_at(&self, t: f64) -> Vector {
        self.solution.eval(t).rows(self.dim, self.dim).into_owned()
    }

    pub fn end_point(&self) -> &Vector {
        self.points.last().expect("non-empty record")
    }

    pub fn end_velocity(&self) -> &Vector {
        self.velocities.last().expect("non-empty record")
    }

    /// True when the record reaches `t` without leaving the chart.
    pub fn reaches(&self, t: f64) -> bool {
        self.t_end() >= t
    }

    /// Largest deviation of `F(x', x')` from its initial value at the nodes.
    pub fn speed_drift(&self, m: &Metric) -> f64 {
        let f0 = m.norm(&self.points[0], &self.velocities[0]);
        self.points
            .iter()
            .zip(&self.velocities)
            .map(|(x, y)| (m.norm(x, y) - f0).abs())
            .fold(0.0, f64::max)
    }

    /// Rows `t, x_1..x_d, y_1..y_d` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.dim {
            let _ = write!(out, ",x{}", i + 1);
        }
        for i in 0..self.dim {
            let _ = write!(out, ",y{}", i + 1);
        }
        out.push('\n');
        for ((t, x), y) in self.times.iter().zip(&self.points).zip(&self.velocities) {
            let _ = write!(out, "{t:.17e}");
            for c in x.iter().chain(y.iter()) {
                let _ = write!(out, ",{c:.17e}");
            }
            out.push('\n');
        }
        out
    }

    /// Whitespace-separated coordinates, one point per line, resampled
    /// uniformly in time.
    pub fn to_polyline(&self, samples: usize) -> String {
        let mut out = String::new();
        let t0 = self.times[0];
        let t1 = self.t_end();
        let samples = samples.max(2);
        for i in 0..samples {
            let t = t0 + (t1 - t0) * i as f64 / (samples - 1) as f64;
            let p = self.point_at(t);
            let line: Vec<String> = p.iter().map(|c| format!("{c:.12e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Tight integrator tolerances for `m`. Finite-difference sprays carry
/// noise near 1e-9, below which the step control only shrinks the steps.
pub fn accurate_options(m: &Metric) -> OdeOptions {
    OdeOptions::with_tol(if m.is_analytic() { 1e-12 } else { 1e-9 })
}

/// Integrate the geodesic with initial data `(x0, y0)` up to `t_end`.
/// Leaving the chart ends the record early with `terminated_by = ChartExit`.
pub fn geodesic(m: &Metric, x0: &Vector, y0: &Vector, t_end: f64, opts: &OdeOptions) -> GeodesicRecord {
    let n = m.dim();
    let mut z0 = Vector::zeros(2 * n);
    z0.rows_mut(0, n).copy_from(x0);
    z0.rows_mut(n, n).copy_from(y0);
    let rhs = |_t: f64, z: &Vector| {
        let x = z.rows(0, n).into_owned();
        let y = z.rows(n, n).into_owned();
        let g = spray(m, &x, &y);
        let mut out = Vector::zeros(2 * n);
        out.rows_mut(0, n).copy_from(&y);
        out.rows_mut(n, n).copy_from(&(g * -2.0));
        Some(out)
    };
    let inside = |z: &Vector| m.contains(&z.rows(0, n).into_owned());
    let sol = ode::integrate(rhs, inside, &z0, 0.0, t_end, opts);
    GeodesicRecord::from_solution(sol, n)
}

/// Checked geodesic integration.
pub fn integrate_geodesic(m: &Metric, v0: &TangentVector, t_end: f64, tol: f64) -> Result<GeodesicRecord> {
    m.eval_f(v0)?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    let rec = geodesic(m, &v0.point, &v0.components, t_end, &OdeOptions::with_tol(tol));
    if rec.terminated_by == Termination::StepFailure {
        return Err(Error::StepFailure {
            t: rec.t_end(),
            reason: "step size underflow",
        });
    }
    Ok(rec)
}

/// `exp_p(v) = gamma_v(1)`, with `exp_p(0) = p`.
pub fn exp_map(m: &Metric, v: &TangentVector) -> Result<Vector> {
    if v.components.iter().all(|c| *c == 0.0) {
        if !m.contains(&v.point) {
            return Err(Error::OutsideChart { point: v.point.iter().copied().collect() });
        }
        return Ok(v.point.clone());
    }
    let rec = integrate_geodesic(m, v, 1.0, 1e-10)?;
    if rec.terminated_by != Termination::TimeEnd {
        return Err(Error::OutsideDomain { t_exit: rec.t_end(), t_target: 1.0 });
    }
    Ok(rec.end_point().clone())
}
