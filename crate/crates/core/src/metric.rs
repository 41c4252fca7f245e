//! Finsler metrics on a single coordinate chart and their pointwise tensors.
//!
//! A [`Metric`] evaluates `F(x, y)` for a base point `x` and a velocity `y`.
//! The built-in families (conformally flat Riemannian metrics, constant
//! Randers norms and a quartic Minkowski norm) carry closed-form fiber and
//! position derivatives of `F^2`. Custom metrics fall back to nested central
//! finite differences of `F^2`.
//!
//! Conventions, with `E = F^2`:
//!
//! * fundamental tensor `g_ij = 1/2 d^2 E / dy^i dy^j`,
//! * Cartan tensor `C_ijk = 1/4 d^3 E / dy^i dy^j dy^k`,
//! * Legendre transform `L(y)_i = g_ij(y) y^j = 1/2 dE / dy^i`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::{Matrix, Vector};

const FD_FIRST: f64 = 1e-5;
const FD_SECOND: f64 = 1e-4;
const FD_THIRD: f64 = 1e-3;
const FD_SECOND_RICHARDSON: f64 = 1e-3;

/// Chart on which a metric is defined.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartDomain {
    /// Axis-aligned box `lo <= x <= hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Open Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    Unbounded,
}

impl ChartDomain {
    pub fn contains(&self, x: &Vector) -> bool {
        if x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match self {
            ChartDomain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(c, (l, h))| *c >= *l && *c <= *h),
            ChartDomain::Ball { center, radius } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                r2 < radius * radius
            }
            ChartDomain::Unbounded => true,
        }
    }

    /// Bounding box of the chart, if it is bounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ChartDomain::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ChartDomain::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            ChartDomain::Unbounded => None,
        }
    }
}

/// Conformal factor `phi` of a metric `F(x, y) = phi(x) |y|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConformalFactor {
    /// `phi = c`; `c = 1` is Euclidean space.
    Constant(f64),
    /// Unit round sphere in the stereographic chart, `phi = 2 / (1 + |x|^2)`.
    Sphere,
    /// Poincare ball model of hyperbolic space, `phi = 2 / (1 - |x|^2)`.
    Hyperbolic,
}

impl ConformalFactor {
    fn value(&self, x: &Vector) -> f64 {
        match self {
            ConformalFactor::Constant(c) => *c,
            ConformalFactor::Sphere => 2.0 / (1.0 + x.norm_squared()),
            ConformalFactor::Hyperbolic => 2.0 / (1.0 - x.norm_squared()),
        }
    }

    /// Gradient of `ln phi`.
    fn log_gradient(&self, x: &Vector) -> Vector {
        match self {
            ConformalFactor::Constant(_) => Vector::zeros(x.len()),
            ConformalFactor::Sphere => x * (-2.0 / (1.0 + x.norm_squared())),
            ConformalFactor::Hyperbolic => x * (2.0 / (1.0 - x.norm_squared())),
        }
    }

    /// Hessian of `ln phi`.
    fn log_hessian(&self, x: &Vector) -> Matrix {
        let n = x.len();
        match self {
            ConformalFactor::Constant(_) => Matrix::zeros(n, n),
            ConformalFactor::Sphere => {
                let s = 1.0 + x.norm_squared();
                Matrix::identity(n, n) * (-2.0 / s) + (x * x.transpose()) * (4.0 / (s * s))
            }
            ConformalFactor::Hyperbolic => {
                let s = 1.0 - x.norm_squared();
                Matrix::identity(n, n) * (2.0 / s) + (x * x.transpose()) * (4.0 / (s * s))
            }
        }
    }
}

/// User-supplied `F(x, y)`.
pub type FinslerFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Family of a metric, selecting the derivative implementation.
#[derive(Clone)]
pub enum MetricKind {
    /// `F = phi(x) |y|`.
    Conformal(ConformalFactor),
    /// `F = sqrt(y^T A y) + b . y` with constant `A` (positive definite) and
    /// `b` (`|b|_A < 1`).
    Randers { a: Matrix, b: Vector },
    /// `F = ((y . y)^2 + c sum_i y_i^4)^(1/4)`, position independent.
    Minkowski { c: f64 },
    /// Arbitrary smooth `F`; all derivatives by finite differences.
    Custom { f: FinslerFn },
}

impl MetricKind {
    pub fn tag(&self) -> &'static str {
        match self {
            MetricKind::Conformal(_) => "riemannian-conformal",
            MetricKind::Randers { .. } => "randers",
            MetricKind::Minkowski { .. } => "minkowski",
            MetricKind::Custom { .. } => "custom",
        }
    }
}

impl fmt::Debug for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Conformal(c) => f.debug_tuple("Conformal").field(c).finish(),
            MetricKind::Randers { a, b } => f
                .debug_struct("Randers")
                .field("a", &a.as_slice())
                .field("b", &b.as_slice())
                .finish(),
            MetricKind::Minkowski { c } => f.debug_struct("Minkowski").field("c", c).finish(),
            MetricKind::Custom { .. } => f.write_str("Custom"),
        }
    }
}

/// A Finsler metric on one coordinate chart. Immutable; cheap to clone.
#[derive(Debug, Clone)]
pub struct Metric {
    name: String,
    dim: usize,
    kind: MetricKind,
    domain: ChartDomain,
    reversed: bool,
}

/// Vector `v` at base point `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub point: Vector,
    pub components: Vector,
}

impl TangentVector {
    pub fn new(point: Vector, components: Vector) -> Self {
        Self { point, components }
    }

    pub fn from_slices(point: &[f64], components: &[f64]) -> Self {
        Self::new(Vector::from_column_slice(point), Vector::from_column_slice(components))
    }
}

/// Covector at a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    pub point: Vector,
    pub components: Vector,
}

impl Covector {
    pub fn new(point: Vector, components: Vector) -> Self {
        Self { point, components }
    }

    pub fn apply(&self, v: &Vector) -> f64 {
        self.components.dot(v)
    }
}

/// Symmetric bilinear form at a point, tagged with the reference vector it was
/// computed for (the fundamental tensor `g_v`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBilinear {
    pub point: Vector,
    pub reference: Vector,
    pub matrix: Matrix,
}

impl SymmetricBilinear {
    pub fn apply(&self, u: &Vector, w: &Vector) -> f64 {
        u.dot(&(&self.matrix * w))
    }
}

impl Metric {
    pub fn new(name: impl Into<String>, dim: usize, kind: MetricKind, domain: ChartDomain) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("metric dimension must be >= 2, got {dim}")));
        }
        match &kind {
            MetricKind::Randers { a, b } => {
                if a.nrows() != dim || a.ncols() != dim || b.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: b.len() });
                }
                let chol = a
                    .clone()
                    .cholesky()
                    .ok_or_else(|| Error::InvalidInput("Randers matrix is not positive definite".into()))?;
                let b_norm = b.dot(&chol.solve(b)).sqrt();
                if b_norm >= 1.0 {
                    return Err(Error::InvalidInput(format!("Randers one-form has |b| = {b_norm} >= 1")));
                }
            }
            MetricKind::Minkowski { c } if *c < 0.0 => {
                return Err(Error::InvalidInput("quartic coefficient must be non-negative".into()));
            }
            _ => {}
        }
        Ok(Self {
            name: name.into(),
            dim,
            kind,
            domain,
            reversed: false,
        })
    }

    /// Euclidean space `R^dim` on an unbounded chart.
    pub fn euclidean(dim: usize) -> Self {
        Self::new("euclidean", dim, MetricKind::Conformal(ConformalFactor::Constant(1.0)), ChartDomain::Unbounded)
            .expect("valid metric")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn domain(&self) -> &ChartDomain {
        &self.domain
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// True when `F` does not depend on the base point.
    pub fn is_position_independent(&self) -> bool {
        matches!(
            self.kind,
            MetricKind::Conformal(ConformalFactor::Constant(_)) | MetricKind::Randers { .. } | MetricKind::Minkowski { .. }
        )
    }

    /// True when `F^2` is quadratic in the fiber.
    pub fn is_riemannian(&self) -> bool {
        matches!(self.kind, MetricKind::Conformal(_))
    }

    /// True when every derivative is closed form.
    pub fn is_analytic(&self) -> bool {
        !matches!(self.kind, MetricKind::Custom { .. })
    }

    pub fn with_domain(mut self, domain: ChartDomain) -> Self {
        self.domain = domain;
        self
    }

    /// The reverse metric `F_rev(x, y) = F(x, -y)`.
    pub fn reverse(&self) -> Metric {
        let mut out = self.clone();
        out.reversed = !self.reversed;
        out.name = if self.reversed {
            self.name.trim_end_matches(" (reversed)").to_string()
        } else {
            format!("{} (reversed)", self.name)
        };
        out
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.domain.contains(x)
    }

    // ------------------------------------------------------------------
    // Checked operations on tangent data.
    // ------------------------------------------------------------------

    fn check_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if !self.contains(x) {
            return Err(Error::OutsideChart { point: x.iter().copied().collect() });
        }
        Ok(())
    }

    fn check_tangent(&self, v: &TangentVector) -> Result<()> {
        self.check_point(&v.point)?;
        if v.components.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.components.len() });
        }
        if v.components.iter().all(|c| *c == 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(())
    }

    /// `F(p, v)`.
    pub fn eval_f(&self, v: &TangentVector) -> Result<f64> {
        self.check_tangent(v)?;
        Ok(self.norm(&v.point, &v.components))
    }

    /// Fundamental tensor `g_v`.
    pub fn fundamental_tensor(&self, v: &TangentVector) -> Result<SymmetricBilinear> {
        self.check_tangent(v)?;
        Ok(SymmetricBilinear {
            point: v.point.clone(),
            reference: v.components.clone(),
            matrix: self.fundamental(&v.point, &v.components),
        })
    }

    /// Cartan tensor `C_v(v1, v2, v3)`.
    pub fn cartan_tensor(&self, v: &TangentVector, v1: &Vector, v2: &Vector, v3: &Vector) -> Result<f64> {
        self.check_tangent(v)?;
        Ok(self.cartan(&v.point, &v.components).contract(v1, v2, v3))
    }

    /// Legendre transform `L(v) = g_v(v, .)`, extended by `L(0) = 0`.
    pub fn legendre(&self, v: &TangentVector) -> Result<Covector> {
        self.check_point(&v.point)?;
        if v.components.iter().all(|c| *c == 0.0) {
            return Ok(Covector::new(v.point.clone(), Vector::zeros(self.dim)));
        }
        Ok(Covector::new(v.point.clone(), self.legendre_raw(&v.point, &v.components)))
    }

    /// Inverse Legendre transform, by damped Newton iteration on
    /// `g_v(v, .) = xi` started from the Euclidean dual.
    pub fn legendre_inverse(&self, xi: &Covector) -> Result<TangentVector> {
        self.check_point(&xi.point)?;
        if xi.components.iter().all(|c| *c == 0.0) {
            return Ok(TangentVector::new(xi.point.clone(), Vector::zeros(self.dim)));
        }
        let v = self.legendre_inverse_raw(&xi.point, &xi.components)?;
        Ok(TangentVector::new(xi.point.clone(), v))
    }

    // ------------------------------------------------------------------
    // Unchecked evaluation on raw coordinate vectors. Callers guarantee
    // y != 0 and consistent dimensions.
    // ------------------------------------------------------------------

    /// `F(x, y)`.
    pub fn norm(&self, x: &Vector, y: &Vector) -> f64 {
        if self.reversed {
            self.base_norm(x, &-y)
        } else {
            self.base_norm(x, y)
        }
    }

    /// `F(x, y)^2`.
    pub fn energy(&self, x: &Vector, y: &Vector) -> f64 {
        let f = self.norm(x, y);
        f * f
    }

    /// Legendre transform components `1/2 dE/dy`.
    pub fn legendre_raw(&self, x: &Vector, y: &Vector) -> Vector {
        if self.reversed {
            -self.base_legendre(x, &-y)
        } else {
            self.base_legendre(x, y)
        }
    }

    /// Fundamental tensor matrix `g_ij(x, y)`.
    pub fn fundamental(&self, x: &Vector, y: &Vector) -> Matrix {
        if self.reversed {
            self.base_fundamental(x, &-y)
        } else {
            self.base_fundamental(x, y)
        }
    }

    /// Cartan tensor `C_ijk(x, y)`.
    pub fn cartan(&self, x: &Vector, y: &Vector) -> Tensor3 {
        if self.reversed {
            let mut c = self.base_cartan(x, &-y);
            c.scale(-1.0);
            c
        } else {
            self.base_cartan(x, y)
        }
    }

    /// Position gradient `dE/dx^l`.
    pub fn energy_dx(&self, x: &Vector, y: &Vector) -> Vector {
        if self.reversed {
            self.base_energy_dx(x, &-y)
        } else {
            self.base_energy_dx(x, y)
        }
    }

    /// Mixed derivative `M[k][l] = d^2 E / dx^k dy^l`.
    pub fn energy_dxdy(&self, x: &Vector, y: &Vector) -> Matrix {
        if self.reversed {
            -self.base_energy_dxdy(x, &-y)
        } else {
            self.base_energy_dxdy(x, y)
        }
    }

    /// Position derivatives of the fundamental tensor, entry `k` is `d g / dx^k`.
    pub fn fundamental_dx(&self, x: &Vector, y: &Vector) -> Vec<Matrix> {
        if self.reversed {
            self.base_fundamental_dx(x, &-y)
        } else {
            self.base_fundamental_dx(x, y)
        }
    }

    /// Closed-form geodesic spray coefficients when available.
    pub(crate) fn analytic_spray(&self, x: &Vector, y: &Vector) -> Option<Vector> {
        let (x, y) = (x, if self.reversed { -y } else { y.clone() });
        match &self.kind {
            MetricKind::Conformal(phi) => {
                let gl = phi.log_gradient(x);
                Some(&y * gl.dot(&y) - gl * (0.5 * y.norm_squared()))
            }
            MetricKind::Randers { .. } | MetricKind::Minkowski { .. } => Some(Vector::zeros(self.dim)),
            MetricKind::Custom { .. } => None,
        }
    }

    /// Closed-form nonlinear connection `N^i_j = dG^i/dy^j` when available.
    pub(crate) fn analytic_nonlinear_connection(&self, x: &Vector, y: &Vector) -> Option<Matrix> {
        let y_base = if self.reversed { -y } else { y.clone() };
        let n = match &self.kind {
            MetricKind::Conformal(phi) => {
                let gl = phi.log_gradient(x);
                let mut n = &y_base * gl.transpose() - &gl * y_base.transpose();
                for i in 0..self.dim {
                    n[(i, i)] += gl.dot(&y_base);
                }
                n
            }
            MetricKind::Randers { .. } | MetricKind::Minkowski { .. } => Matrix::zeros(self.dim, self.dim),
            MetricKind::Custom { .. } => return None,
        };
        // G_rev(x, y) = G(x, -y), so N_rev(x, y) = -N(x, -y).
        Some(if self.reversed { -n } else { n })
    }

    /// Closed-form `dG^i/dx^k` when available.
    pub(crate) fn analytic_spray_dx(&self, x: &Vector, y: &Vector) -> Option<Matrix> {
        let y = if self.reversed { -y } else { y.clone() };
        match &self.kind {
            MetricKind::Conformal(phi) => {
                let h = phi.log_hessian(x);
                let hy = &h * &y;
                Some(&y * hy.transpose() - h * (0.5 * y.norm_squared()))
            }
            MetricKind::Randers { .. } | MetricKind::Minkowski { .. } => Some(Matrix::zeros(self.dim, self.dim)),
            MetricKind::Custom { .. } => None,
        }
    }

    pub(crate) fn legendre_inverse_raw(&self, x: &Vector, xi: &Vector) -> Result<Vector> {
        let xi_norm = xi.norm();
        // Euclidean dual, rescaled so that F(v)^2 = xi(v) holds along the ray.
        let mut v = xi.clone();
        let f2 = self.energy(x, &v);
        v *= xi.dot(&v) / f2;
        let mut residual = (self.legendre_raw(x, &v) - xi).norm();
        let target = 1e-14 * xi_norm;
        for _ in 0..100 {
            if residual <= target {
                return Ok(v);
            }
            let g = self.fundamental(x, &v);
            let r = self.legendre_raw(x, &v) - xi;
            let step = match g.lu().solve(&r) {
                Some(s) => s,
                None => break,
            };
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial = &v - &step * lambda;
                if trial.iter().all(|c| c.is_finite()) && trial.norm() > 0.0 {
                    let res = (self.legendre_raw(x, &trial) - xi).norm();
                    if res < residual {
                        v = trial;
                        residual = res;
                        improved = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        // Finite-difference metrics stall at their truncation floor.
        if residual <= 1e-9 * xi_norm.max(1e-300) {
            Ok(v)
        } else {
            Err(Error::NoConvergence { what: "inverse Legendre transform", residual })
        }
    }

    // ------------------------------------------------------------------
    // Base (unreversed) implementations per family.
    // ------------------------------------------------------------------

    fn base_norm(&self, x: &Vector, y: &Vector) -> f64 {
        match &self.kind {
            MetricKind::Conformal(phi) => phi.value(x) * y.norm(),
            MetricKind::Randers { a, b } => (y.dot(&(a * y))).sqrt() + b.dot(y),
            MetricKind::Minkowski { c } => {
                let s = y.norm_squared();
                let q = s * s + c * y.iter().map(|t| t.powi(4)).sum::<f64>();
                q.sqrt().sqrt()
            }
            MetricKind::Custom { f } => f(x.as_slice(), y.as_slice()),
        }
    }

    fn base_energy(&self, x: &Vector, y: &Vector) -> f64 {
        let f = self.base_norm(x, y);
        f * f
    }

    fn base_legendre(&self, x: &Vector, y: &Vector) -> Vector {
        match &self.kind {
            MetricKind::Conformal(phi) => {
                let p = phi.value(x);
                y * (p * p)
            }
            MetricKind::Randers { a, b } => {
                let ay = a * y;
                let alpha = y.dot(&ay).sqrt();
                let f = alpha + b.dot(y);
                (ay / alpha + b) * f
            }
            MetricKind::Minkowski { c } => {
                let (q, qi) = quartic_q1(y, *c);
                qi * (0.25 / q.sqrt())
            }
            MetricKind::Custom { .. } => {
                let h = FD_FIRST * y.norm();
                Vector::from_fn(self.dim, |i, _| {
                    let mut yp = y.clone();
                    let mut ym = y.clone();
                    yp[i] += h;
                    ym[i] -= h;
                    0.5 * (self.base_energy(x, &yp) - self.base_energy(x, &ym)) / (2.0 * h)
                })
            }
        }
    }

    fn base_fundamental(&self, x: &Vector, y: &Vector) -> Matrix {
        let n = self.dim;
        match &self.kind {
            MetricKind::Conformal(phi) => {
                let p = phi.value(x);
                Matrix::identity(n, n) * (p * p)
            }
            MetricKind::Randers { a, b } => {
                let (f, fi, aij) = randers_first_second(a, b, y);
                &fi * fi.transpose() + aij * f
            }
            MetricKind::Minkowski { c } => {
                let (q, qi) = quartic_q1(y, *c);
                let qij = quartic_q2(y, *c);
                let s = q.sqrt();
                (qij * (0.5 / s) - &qi * qi.transpose() * (0.25 / (q * s))) * 0.5
            }
            MetricKind::Custom { .. } => {
                let e0 = self.base_energy(x, y);
                let second = |h: f64| {
                    let e = |dy: &[(usize, f64)]| {
                        let mut yy = y.clone();
                        for (i, d) in dy {
                            yy[*i] += d;
                        }
                        self.base_energy(x, &yy)
                    };
                    let mut g = Matrix::zeros(n, n);
                    for i in 0..n {
                        g[(i, i)] = 0.5 * (e(&[(i, h)]) - 2.0 * e0 + e(&[(i, -h)])) / (h * h);
                        for j in 0..i {
                            let v = 0.5
                                * (e(&[(i, h), (j, h)]) - e(&[(i, h), (j, -h)]) - e(&[(i, -h), (j, h)])
                                    + e(&[(i, -h), (j, -h)]))
                                / (4.0 * h * h);
                            g[(i, j)] = v;
                            g[(j, i)] = v;
                        }
                    }
                    g
                };
                // Richardson extrapolation of the second differences.
                let h = FD_SECOND_RICHARDSON * y.norm();
                (second(h) * 4.0 - second(2.0 * h)) / 3.0
            }
        }
    }

    fn base_cartan(&self, x: &Vector, y: &Vector) -> Tensor3 {
        let n = self.dim;
        match &self.kind {
            MetricKind::Conformal(_) => Tensor3::zeros(n),
            MetricKind::Randers { a, b } => {
                let (f, fi, aij) = randers_first_second(a, b, y);
                let alpha = y.dot(&(a * y)).sqrt();
                let ai = a * y / alpha;
                let mut c = Tensor3::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let a3 = -(aij[(i, k)] * ai[j] + ai[i] * aij[(j, k)] + aij[(i, j)] * ai[k]) / alpha;
                            let v = 0.5
                                * (aij[(i, k)] * fi[j] + fi[i] * aij[(j, k)] + fi[k] * aij[(i, j)] + f * a3);
                            c.set(i, j, k, v);
                        }
                    }
                }
                c
            }
            MetricKind::Minkowski { c: coef } => {
                let (q, qi) = quartic_q1(y, *coef);
                let qij = quartic_q2(y, *coef);
                let s = q.sqrt();
                let mut c = Tensor3::zeros(n);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let q3 = quartic_q3(y, *coef, i, j, k);
                            let e3 = 0.5 * q3 / s
                                - 0.25 / (q * s) * (qij[(i, j)] * qi[k] + qij[(i, k)] * qi[j] + qij[(j, k)] * qi[i])
                                + 0.375 / (q * q * s) * qi[i] * qi[j] * qi[k];
                            c.set(i, j, k, 0.25 * e3);
                        }
                    }
                }
                c
            }
            MetricKind::Custom { .. } => {
                let h = FD_THIRD * y.norm();
                let mut c = Tensor3::zeros(n);
                for i in 0..n {
                    for j in i..n {
                        for k in j..n {
                            let mut acc = 0.0;
                            for s in 0..8u8 {
                                let si = if s & 1 == 0 { 1.0 } else { -1.0 };
                                let sj = if s & 2 == 0 { 1.0 } else { -1.0 };
                                let sk = if s & 4 == 0 { 1.0 } else { -1.0 };
                                let mut yy = y.clone();
                                yy[i] += si * h;
                                yy[j] += sj * h;
                                yy[k] += sk * h;
                                acc += si * sj * sk * self.base_energy(x, &yy);
                            }
                            let v = 0.25 * acc / (8.0 * h * h * h);
                            for (a, b, d) in permutations3(i, j, k) {
                                c.set(a, b, d, v);
                            }
                        }
                    }
                }
                c
            }
        }
    }

    fn base_energy_dx(&self, x: &Vector, y: &Vector) -> Vector {
        match &self.kind {
            MetricKind::Conformal(phi) => {
                let p = phi.value(x);
                phi.log_gradient(x) * (2.0 * p * p * y.norm_squared())
            }
            MetricKind::Randers { .. } | MetricKind::Minkowski { .. } => Vector::zeros(self.dim),
            MetricKind::Custom { .. } => {
                let h = FD_FIRST * x.norm().max(1.0);
                Vector::from_fn(self.dim, |k, _| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += h;
                    xm[k] -= h;
                    (self.base_energy(&xp, y) - self.base_energy(&xm, y)) / (2.0 * h)
                })
            }
        }
    }

    fn base_energy_dxdy(&self, x: &Vector, y: &Vector) -> Matrix {
        let n = self.dim;
        match &self.kind {
            MetricKind::Conformal(phi) => {
                let p = phi.value(x);
                phi.log_gradient(x) * y.transpose() * (4.0 * p * p)
            }
            MetricKind::Randers { .. } | MetricKind::Minkowski { .. } => Matrix::zeros(n, n),
            MetricKind::Custom { .. } => {
                let hx = FD_SECOND * x.norm().max(1.0);
                let hy = FD_SECOND * y.norm();
                Matrix::from_fn(n, n, |k, l| {
                    let mut acc = 0.0;
                    for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                        let mut xx = x.clone();
                        let mut yy = y.clone();
                        xx[k] += sx * hx;
                        yy[l] += sy * hy;
                        acc += sx * sy * self.base_energy(&xx, &yy);
                    }
                    acc / (4.0 * hx * hy)
                })
            }
        }
    }

    fn base_fundamental_dx(&self, x: &Vector, y: &Vector) -> Vec<Matrix> {
        let n = self.dim;
        match &self.kind {
            MetricKind::Conformal(phi) => {
                let p = phi.value(x);
                let gl = phi.log_gradient(x);
                (0..n).map(|k| Matrix::identity(n, n) * (2.0 * p * p * gl[k])).collect()
            }
            MetricKind::Randers { .. } | MetricKind::Minkowski { .. } => vec![Matrix::zeros(n, n); n],
            MetricKind::Custom { .. } => {
                let hx = FD_THIRD * x.norm().max(1.0);
                let hy = FD_THIRD * y.norm();
                (0..n)
                    .map(|k| {
                        let mut m = Matrix::zeros(n, n);
                        for i in 0..n {
                            for j in 0..=i {
                                let mut acc = 0.0;
                                for s in 0..8u8 {
                                    let sk = if s & 1 == 0 { 1.0 } else { -1.0 };
                                    let si = if s & 2 == 0 { 1.0 } else { -1.0 };
                                    let sj = if s & 4 == 0 { 1.0 } else { -1.0 };
                                    let mut xx = x.clone();
                                    let mut yy = y.clone();
                                    xx[k] += sk * hx;
                                    yy[i] += si * hy;
                                    yy[j] += sj * hy;
                                    acc += sk * si * sj * self.base_energy(&xx, &yy);
                                }
                                let v = 0.5 * acc / (8.0 * hx * hy * hy);
                                m[(i, j)] = v;
                                m[(j, i)] = v;
                            }
                        }
                        m
                    })
                    .collect()
            }
        }
    }
}

fn permutations3(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)]
}

/// `(F, dF/dy, d^2 F / dy^2)` for a Randers norm.
fn randers_first_second(a: &Matrix, b: &Vector, y: &Vector) -> (f64, Vector, Matrix) {
    let ay = a * y;
    let alpha = y.dot(&ay).sqrt();
    let ai = &ay / alpha;
    let aij = (a - &ai * ai.transpose()) / alpha;
    (alpha + b.dot(y), ai + b, aij)
}

/// `Q = (y.y)^2 + c sum y^4` and its gradient.
fn quartic_q1(y: &Vector, c: f64) -> (f64, Vector) {
    let s = y.norm_squared();
    let q = s * s + c * y.iter().map(|t| t.powi(4)).sum::<f64>();
    let qi = Vector::from_fn(y.len(), |i, _| 4.0 * s * y[i] + 4.0 * c * y[i].powi(3));
    (q, qi)
}

fn quartic_q2(y: &Vector, c: f64) -> Matrix {
    let s = y.norm_squared();
    let n = y.len();
    Matrix::from_fn(n, n, |i, j| {
        let mut v = 8.0 * y[i] * y[j];
        if i == j {
            v += 4.0 * s + 12.0 * c * y[i] * y[i];
        }
        v
    })
}

fn quartic_q3(y: &Vector, c: f64, i: usize, j: usize, k: usize) -> f64 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut v = 8.0 * (d(i, k) * y[j] + d(j, k) * y[i] + d(i, j) * y[k]);
    if i == j && j == k {
        v += 24.0 * c * y[i];
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn tv(p: &[f64], v: &[f64]) -> TangentVector {
        TangentVector::from_slices(p, v)
    }

    #[test]
    fn euclidean_norm_of_three_four() {
        let m = corpus::euclidean_plane();
        assert_eq!(m.eval_f(&tv(&[0.0, 0.0], &[3.0, 4.0])).unwrap(), 5.0);
    }

    #[test]
    fn randers_is_irreversible() {
        let m = corpus::randers_plane();
        assert!((m.eval_f(&tv(&[0.0, 0.0], &[1.0, 0.0])).unwrap() - 1.5).abs() < 1e-15);
        assert!((m.eval_f(&tv(&[0.0, 0.0], &[-1.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_and_chart_errors() {
        let m = corpus::euclidean_plane();
        assert_eq!(m.eval_f(&tv(&[0.0, 0.0], &[0.0, 0.0])), Err(Error::ZeroVector));
        let hy = corpus::hyperbolic_disk();
        assert!(matches!(hy.eval_f(&tv(&[2.0, 0.0], &[1.0, 0.0])), Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn fundamental_tensor_examples() {
        let e2 = corpus::euclidean_plane();
        let g = e2.fundamental_tensor(&tv(&[0.3, -1.0], &[0.2, 5.0])).unwrap();
        assert_eq!(g.matrix, Matrix::identity(2, 2));

        let rd = corpus::randers_plane();
        let v = tv(&[0.0, 0.0], &[1.0, 0.0]);
        let g = rd.fundamental_tensor(&v).unwrap();
        assert!((g.apply(&v.components, &v.components) - 2.25).abs() < 1e-14);

        // F^2 = 4|v|^2 at the origin of the stereographic chart.
        let sp = corpus::sphere_stereographic();
        let g = sp.fundamental_tensor(&tv(&[0.0, 0.0], &[1.0, 0.0])).unwrap();
        assert!((g.matrix.clone() - Matrix::identity(2, 2) * 4.0).abs().max() < 1e-15);
    }

    #[test]
    fn randers_cartan_matches_finite_difference_oracle() {
        let rd = corpus::randers_plane();
        let v = tv(&[0.0, 0.0], &[0.0, 1.0]);
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        let analytic = rd.cartan_tensor(&v, &e1, &e1, &e1).unwrap();
        // Independent oracle: 1/4 of the third directional derivative of F^2.
        let h = 1e-4;
        let e = |s: f64| {
            let y = Vector::from_vec(vec![s, 1.0]);
            let f = y.norm() + 0.5 * y[0];
            f * f
        };
        let fd = 0.25 * (e(2.0 * h) - 2.0 * e(h) + 2.0 * e(-h) - e(-2.0 * h)) / (2.0 * h * h * h);
        assert!(analytic.abs() > 0.1, "expected a non-zero Cartan value, got {analytic}");
        assert!((analytic - fd).abs() < 1e-3, "{analytic} vs {fd}");
        // F^2 = (sqrt(1+s^2) + s/2)^2 expands to 1.25 + s + 1.25 s^2 + O(s^4)
        // with cubic coefficient 1/2: third derivative 3, Cartan value 3/4.
        assert!((analytic - 0.75).abs() < 1e-12);
    }

    #[test]
    fn cartan_vanishes_with_reference_slot() {
        let rd = corpus::randers_plane();
        let v = tv(&[0.0, 0.0], &[0.3, 0.8]);
        let u = Vector::from_vec(vec![1.0, -2.0]);
        let w = Vector::from_vec(vec![0.5, 0.7]);
        let c = rd.cartan_tensor(&v, &v.components, &u, &w).unwrap();
        assert!(c.abs() < 1e-14);
    }

    #[test]
    fn legendre_examples() {
        let e2 = corpus::euclidean_plane();
        let l = e2.legendre(&tv(&[0.0, 0.0], &[3.0, 4.0])).unwrap();
        assert_eq!(l.components.as_slice(), &[3.0, 4.0]);

        let rd = corpus::randers_plane();
        let v = tv(&[0.0, 0.0], &[1.0, 0.0]);
        let l = rd.legendre(&v).unwrap();
        assert!((l.components[0] - 2.25).abs() < 1e-14 && l.components[1].abs() < 1e-14);
        assert!((l.apply(&v.components) - 2.25).abs() < 1e-14);

        let back = rd.legendre_inverse(&Covector::new(v.point.clone(), Vector::from_vec(vec![2.25, 0.0]))).unwrap();
        assert!((back.components - v.components).norm() < 1e-12);

        let zero = rd.legendre(&tv(&[0.0, 0.0], &[0.0, 0.0])).unwrap();
        assert_eq!(zero.components.norm(), 0.0);
    }

    #[test]
    fn reverse_metric_relations() {
        let rd = corpus::randers_plane();
        let rev = rd.reverse();
        assert!((rev.eval_f(&tv(&[0.0, 0.0], &[1.0, 0.0])).unwrap() - 0.5).abs() < 1e-15);
        let x = Vector::from_vec(vec![0.1, 0.2]);
        let y = Vector::from_vec(vec![0.4, -0.9]);
        assert!((rev.fundamental(&x, &y) - rd.fundamental(&x, &-&y)).abs().max() < 1e-14);
        let mut neg = rd.cartan(&x, &-&y);
        neg.scale(-1.0);
        assert!(rev.cartan(&x, &y).sub(&neg).max_abs() < 1e-14);
        assert_eq!(rev.reverse().name(), rd.name());
    }

    #[test]
    fn quartic_minkowski_matches_finite_differences() {
        let m = corpus::quartic_minkowski();
        let fd = Metric::new("fd", 2, MetricKind::Custom { f: {
            let m = m.clone();
            Arc::new(move |x, y| m.norm(&Vector::from_column_slice(x), &Vector::from_column_slice(y)))
        } }, ChartDomain::Unbounded).unwrap();
        let x = Vector::from_vec(vec![0.0, 0.0]);
        let y = Vector::from_vec(vec![0.7, -0.4]);
        assert!((m.fundamental(&x, &y) - fd.fundamental(&x, &y)).abs().max() < 1e-6);
        assert!(m.cartan(&x, &y).sub(&fd.cartan(&x, &y)).max_abs() < 1e-5);
        assert!((m.legendre_raw(&x, &y) - fd.legendre_raw(&x, &y)).norm() < 1e-9);
    }

    #[test]
    fn randers_validation() {
        let bad = Metric::new(
            "bad",
            2,
            MetricKind::Randers { a: Matrix::identity(2, 2), b: Vector::from_vec(vec![1.2, 0.0]) },
            ChartDomain::Unbounded,
        );
        assert!(matches!(bad, Err(Error::InvalidInput(_))));
    }
}
