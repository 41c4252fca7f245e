//! Parametrized submanifolds, normal cones, second fundamental form and
//! shape operator.
//!
//! A normal vector `n` at `p` satisfies `g_n(n, w) = 0` for every tangent `w`.
//! Equivalently `L(n)` annihilates `T_pN`, so normals are obtained by pulling
//! annihilator covectors back through the inverse Legendre transform.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geodesic::chern;
use crate::linalg::{self, generalized_symmetric_eigenvalues};
use crate::metric::{Covector, Metric, TangentVector};
use crate::sampling;
use crate::{Matrix, Vector};

const FD_TANGENT: f64 = 1e-6;
const FD_SECOND: f64 = 1e-4;
const FD_EXTENSION: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    /// Only C1 at the parameters listed by [`Immersion::singular_params`].
    C1Only,
}

/// Choice of normal ray for hypersurfaces. `Positive` is the annihilator
/// covector given by the generalized cross product of the tangent frame; for a
/// plane curve with velocity `w` it is `(-w_2, w_1)`, the left side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoOrientation {
    Positive,
    Negative,
}

impl CoOrientation {
    pub fn flip(self) -> Self {
        match self {
            CoOrientation::Positive => CoOrientation::Negative,
            CoOrientation::Negative => CoOrientation::Positive,
        }
    }

    fn sign(self) -> f64 {
        match self {
            CoOrientation::Positive => 1.0,
            CoOrientation::Negative => -1.0,
        }
    }
}

/// A parametrized immersion `u -> x(u)` into one chart.
pub trait Immersion: Send + Sync {
    fn ambient_dim(&self) -> usize;
    fn param_dim(&self) -> usize;
    /// Parameter box `(lo, hi)`.
    fn param_box(&self) -> (Vec<f64>, Vec<f64>);
    fn periodic(&self) -> Vec<bool>;
    fn point(&self, u: &[f64]) -> Vector;

    /// Columns are `dx/du^a`.
    fn tangent_frame(&self, u: &[f64]) -> Matrix {
        let k = self.param_dim();
        let mut frame = Matrix::zeros(self.ambient_dim(), k);
        for a in 0..k {
            let h = FD_TANGENT * u[a].abs().max(1.0);
            let mut up = u.to_vec();
            let mut um = u.to_vec();
            up[a] += h;
            um[a] -= h;
            frame.set_column(a, &((self.point(&up) - self.point(&um)) / (2.0 * h)));
        }
        frame
    }

    /// `d^2 x / du^a du^b`.
    fn second_derivative(&self, u: &[f64], a: usize, b: usize) -> Vector {
        let shift = |da: f64, db: f64| {
            let mut v = u.to_vec();
            v[a] += da;
            v[b] += db;
            self.point(&v)
        };
        let ha = FD_SECOND * u[a].abs().max(1.0);
        if a == b {
            (shift(ha, 0.0) - self.point(u) * 2.0 + shift(-ha, 0.0)) / (ha * ha)
        } else {
            let hb = FD_SECOND * u[b].abs().max(1.0);
            (shift(ha, hb) - shift(ha, -hb) - shift(-ha, hb) + shift(-ha, -hb)) / (4.0 * ha * hb)
        }
    }

    fn smoothness(&self) -> Smoothness {
        Smoothness::Smooth
    }

    /// Parameters where the immersion fails to be C2.
    fn singular_params(&self) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

/// A named immersed submanifold.
#[derive(Clone)]
pub struct Submanifold {
    name: String,
    immersion: Arc<dyn Immersion>,
}

impl fmt::Debug for Submanifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Submanifold")
            .field("name", &self.name)
            .field("param_dim", &self.param_dim())
            .field("ambient_dim", &self.ambient_dim())
            .finish()
    }
}

impl Submanifold {
    pub fn new(name: impl Into<String>, immersion: impl Immersion + 'static) -> Self {
        Self { name: name.into(), immersion: Arc::new(immersion) }
    }

    pub fn from_arc(name: impl Into<String>, immersion: Arc<dyn Immersion>) -> Self {
        Self { name: name.into(), immersion }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.immersion.ambient_dim()
    }

    pub fn param_dim(&self) -> usize {
        self.immersion.param_dim()
    }

    pub fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.immersion.param_box()
    }

    pub fn periodic(&self) -> Vec<bool> {
        self.immersion.periodic()
    }

    pub fn point(&self, u: &[f64]) -> Vector {
        self.immersion.point(&self.wrap(u))
    }

    pub fn tangent_frame(&self, u: &[f64]) -> Matrix {
        self.immersion.tangent_frame(&self.wrap(u))
    }

    pub fn second_derivative(&self, u: &[f64], a: usize, b: usize) -> Vector {
        self.immersion.second_derivative(&self.wrap(u), a, b)
    }

    pub fn smoothness(&self) -> Smoothness {
        self.immersion.smoothness()
    }

    pub fn immersion(&self) -> &Arc<dyn Immersion> {
        &self.immersion
    }

    /// Compact when every parameter direction is periodic.
    pub fn is_compact(&self) -> bool {
        self.periodic().iter().all(|p| *p)
    }

    /// Map periodic parameters into their fundamental box.
    pub fn wrap(&self, u: &[f64]) -> Vec<f64> {
        let (lo, hi) = self.immersion.param_box();
        let per = self.immersion.periodic();
        u.iter()
            .enumerate()
            .map(|(a, &x)| {
                if per[a] {
                    let len = hi[a] - lo[a];
                    lo[a] + (x - lo[a]).rem_euclid(len)
                } else {
                    x
                }
            })
            .collect()
    }

    /// Distance between parameters, respecting periodicity.
    pub fn param_distance(&self, u: &[f64], v: &[f64]) -> f64 {
        let (lo, hi) = self.immersion.param_box();
        let per = self.immersion.periodic();
        u.iter()
            .zip(v)
            .enumerate()
            .map(|(a, (x, y))| {
                let mut d = (x - y).abs();
                if per[a] {
                    let len = hi[a] - lo[a];
                    d = d.rem_euclid(len);
                    d = d.min(len - d);
                }
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Deterministic parameter samples: an offset uniform grid in one
    /// dimension, Halton points otherwise.
    pub fn sample_params(&self, count: usize) -> Vec<Vec<f64>> {
        let k = self.param_dim();
        if k == 0 {
            return vec![Vec::new()];
        }
        let (lo, hi) = self.immersion.param_box();
        if k == 1 {
            return (0..count)
                .map(|j| vec![lo[0] + (hi[0] - lo[0]) * (j as f64 + 0.5) / count as f64])
                .collect();
        }
        (0..count as u64)
            .map(|j| {
                sampling::halton(j, k)
                    .iter()
                    .enumerate()
                    .map(|(a, s)| lo[a] + (hi[a] - lo[a]) * s)
                    .collect()
            })
            .collect()
    }

    /// Largest chart distance between sampled points (at least 1e-3).
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Vector> = self.sample_params(128).iter().map(|u| self.point(u)).collect();
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in 0..i {
                d = d.max((&pts[i] - &pts[j]).norm());
            }
        }
        d.max(1e-3)
    }

    /// `NotC2` when `u` is within two second-derivative steps of a point
    /// where the immersion is only C1.
    pub fn check_c2(&self, u: &[f64]) -> Result<()> {
        if self.smoothness() == Smoothness::Smooth {
            return Ok(());
        }
        for s in self.immersion.singular_params() {
            let reach = 2.0 * FD_SECOND * s.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
            if self.param_distance(u, &s) <= reach {
                return Err(Error::NotC2 { param: u.to_vec() });
            }
        }
        Ok(())
    }

    /// Signed area enclosed by a closed plane curve (positive when the
    /// parametrization runs counter-clockwise).
    pub fn signed_area(&self) -> Result<f64> {
        if self.ambient_dim() != 2 || self.param_dim() != 1 || !self.is_compact() {
            return Err(Error::NotPlanar(format!("{} is not a closed plane curve", self.name)));
        }
        let pts: Vec<Vector> = self.sample_params(2048).iter().map(|u| self.point(u)).collect();
        let mut area = 0.0;
        for i in 0..pts.len() {
            let a = &pts[i];
            let b = &pts[(i + 1) % pts.len()];
            area += a[0] * b[1] - a[1] * b[0];
        }
        Ok(0.5 * area)
    }

    /// Co-orientation pointing into the bounded region of a closed plane curve.
    pub fn inward(&self) -> Result<CoOrientation> {
        Ok(if self.signed_area()? > 0.0 { CoOrientation::Positive } else { CoOrientation::Negative })
    }
}

/// A unit normal vector at the point `x(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalVector {
    pub u: Vec<f64>,
    pub vector: TangentVector,
    pub side: Option<CoOrientation>,
}

impl NormalVector {
    pub fn point(&self) -> &Vector {
        &self.vector.point
    }

    pub fn direction(&self) -> &Vector {
        &self.vector.components
    }
}

/// Orthonormal (Euclidean) basis of the annihilator of the frame columns,
/// as columns.
pub fn annihilator_basis(frame: &Matrix) -> Matrix {
    let n = frame.nrows();
    let mut basis: Vec<Vector> = Vec::new();
    let mut tangent: Vec<Vector> = Vec::new();
    for a in 0..frame.ncols() {
        let mut v = frame.column(a).into_owned();
        for t in &tangent {
            v -= t * t.dot(&v);
        }
        let nv = v.norm();
        if nv > 1e-12 {
            tangent.push(v / nv);
        }
    }
    for i in 0..n {
        let mut v = Vector::zeros(n);
        v[i] = 1.0;
        for t in tangent.iter().chain(basis.iter()) {
            v -= t * t.dot(&v);
        }
        // Second pass for numerical orthogonality.
        for t in tangent.iter().chain(basis.iter()) {
            v -= t * t.dot(&v);
        }
        let nv = v.norm();
        if nv > 1e-6 && tangent.len() + basis.len() < n {
            basis.push(v / nv);
        }
    }
    let mut out = Matrix::zeros(n, basis.len());
    for (j, b) in basis.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Generalized cross product of `n - 1` frame columns: the covector
/// `xi_i = (-1)^(i + n - 1) det(frame without row i)`.
pub fn hypersurface_covector(frame: &Matrix) -> Vector {
    let n = frame.nrows();
    Vector::from_fn(n, |i, _| {
        let minor = frame.clone().remove_row(i);
        let sign = if (i + n - 1) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Pull back an annihilator covector `xi` at `x(u)` to a unit normal.
pub fn unit_normal_sample(m: &Metric, sub: &Submanifold, u: &[f64], xi: &Vector) -> Result<NormalVector> {
    let p = sub.point(u);
    let frame = sub.tangent_frame(u);
    let xn = xi.norm();
    if xn == 0.0 {
        return Err(Error::ZeroVector);
    }
    for a in 0..frame.ncols() {
        let w = frame.column(a);
        if xi.dot(&w).abs() > 1e-8 * xn * w.norm() {
            return Err(Error::InvalidInput("covector does not annihilate the tangent space".into()));
        }
    }
    let v = m.legendre_inverse(&Covector::new(p.clone(), xi.clone()))?;
    let f = m.norm(&p, &v.components);
    Ok(NormalVector {
        u: u.to_vec(),
        vector: TangentVector::new(p, v.components / f),
        side: None,
    })
}

/// Unit normal of a hypersurface on the given side.
pub fn hypersurface_normal(m: &Metric, sub: &Submanifold, u: &[f64], side: CoOrientation) -> Result<NormalVector> {
    if sub.param_dim() + 1 != sub.ambient_dim() {
        return Err(Error::InvalidInput(format!("{} is not a hypersurface", sub.name())));
    }
    let frame = sub.tangent_frame(u);
    let xi = hypersurface_covector(&frame) * side.sign();
    let mut normal = unit_normal_sample(m, sub, u, &xi)?;
    normal.side = Some(side);
    Ok(normal)
}

/// Low-discrepancy sample of the unit normal cone at `x(u)`. Hypersurfaces
/// always return their two unit normals.
pub fn normal_cone_sample(m: &Metric, sub: &Submanifold, u: &[f64], count: usize) -> Result<Vec<NormalVector>> {
    if sub.param_dim() + 1 == sub.ambient_dim() {
        return Ok(vec![
            hypersurface_normal(m, sub, u, CoOrientation::Positive)?,
            hypersurface_normal(m, sub, u, CoOrientation::Negative)?,
        ]);
    }
    let basis = annihilator_basis(&sub.tangent_frame(u));
    let c = basis.ncols();
    (0..count)
        .map(|j| {
            let unit: Vec<f64> = if c == 2 {
                vec![(j as f64 + 0.5) / count as f64]
            } else {
                sampling::halton(j as u64, c.saturating_sub(1).max(1))
            };
            let s = Vector::from_vec(sampling::sphere_point(&unit, c));
            unit_normal_sample(m, sub, u, &(&basis * s))
        })
        .collect()
}

/// `max_a |g_n(n, w_a)| / |w_a|` over the tangent frame.
pub fn normal_residual(m: &Metric, sub: &Submanifold, normal: &NormalVector) -> f64 {
    let frame = sub.tangent_frame(&normal.u);
    let n = normal.direction();
    let l = m.legendre_raw(normal.point(), n);
    (0..frame.ncols())
        .map(|a| {
            let w = frame.column(a);
            l.dot(&w).abs() / w.norm()
        })
        .fold(0.0, f64::max)
}

fn check_normal(m: &Metric, sub: &Submanifold, normal: &NormalVector) -> Result<()> {
    let residual = normal_residual(m, sub, normal);
    let fr = (m.norm(normal.point(), normal.direction()) - 1.0).abs();
    if residual > 1e-6 || fr > 1e-6 {
        return Err(Error::NotNormal { residual: residual.max(fr) });
    }
    Ok(())
}

/// Shape operator on `T_pN` in the basis of the tangent frame.
#[derive(Debug, Clone)]
pub struct ShapeOperator {
    /// Tangent frame (ambient x param_dim).
    pub frame: Matrix,
    /// Matrix of `A_n` acting on frame coefficients.
    pub matrix: Matrix,
    /// Gram matrix `g_n(w_a, w_b)`.
    pub inner: Matrix,
}

impl ShapeOperator {
    /// Frame coefficients of an ambient tangent vector.
    pub fn coefficients(&self, x: &Vector) -> Result<Vector> {
        let gram = self.frame.transpose() * &self.frame;
        let c = gram
            .lu()
            .solve(&(self.frame.transpose() * x))
            .ok_or_else(|| Error::InvalidInput("degenerate tangent frame".into()))?;
        let resid = (&self.frame * &c - x).norm();
        if resid > 1e-6 * x.norm().max(1e-300) {
            return Err(Error::InvalidInput(format!("vector is not tangent (residual {resid:.3e})")));
        }
        Ok(c)
    }

    /// `A_n x` for an ambient tangent vector `x`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let c = self.coefficients(x)?;
        Ok(&self.frame * (&self.matrix * c))
    }

    /// Sorted eigenvalues (principal curvatures).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let s = &self.inner * &self.matrix;
        generalized_symmetric_eigenvalues(&s, &self.inner).unwrap_or_default()
    }

    /// Largest `|g_n(A x, y) - g_n(x, A y)|` over frame vectors.
    pub fn self_adjointness_residual(&self) -> f64 {
        linalg::asymmetry(&(&self.inner * &self.matrix))
    }
}

/// Shape operator `A_n` from `g_n(A_n x, y) = g_n(n, Pi(x, y))`.
pub fn shape_operator(m: &Metric, sub: &Submanifold, normal: &NormalVector) -> Result<ShapeOperator> {
    check_normal(m, sub, normal)?;
    sub.check_c2(&normal.u)?;
    let u = &normal.u;
    let p = normal.point();
    let n = normal.direction();
    let frame = sub.tangent_frame(u);
    let k = frame.ncols();
    let g = m.fundamental(p, n);
    let gamma = chern(m, p, n);
    let gn = &g * n;
    let inner = frame.transpose() * &g * &frame;
    let mut s = Matrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let wa = frame.column(a).into_owned();
            let wb = frame.column(b).into_owned();
            let z = sub.second_derivative(u, a, b) + gamma.apply_lower(&wa, &wb);
            let v = gn.dot(&z);
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    let matrix = inner
        .clone()
        .lu()
        .solve(&s)
        .ok_or_else(|| Error::InvalidInput("degenerate tangent frame".into()))?;
    Ok(ShapeOperator { frame, matrix, inner })
}

/// Shape operator from `A_n x = -(nabla^n_x n~)^T`, where the normal field
/// `n~` along N pulls back the annihilator projection of `L(n)`.
pub fn shape_operator_by_extension(m: &Metric, sub: &Submanifold, normal: &NormalVector) -> Result<ShapeOperator> {
    check_normal(m, sub, normal)?;
    sub.check_c2(&normal.u)?;
    let u = &normal.u;
    let p = normal.point();
    let n = normal.direction();
    let xi0 = m.legendre_raw(p, n);
    let extension = |uu: &[f64]| -> Result<Vector> {
        let frame = sub.tangent_frame(uu);
        let q = sub.point(uu);
        let gram = frame.transpose() * &frame;
        let c = gram.lu().solve(&(frame.transpose() * &xi0)).unwrap_or_else(|| Vector::zeros(frame.ncols()));
        let xi = &xi0 - &frame * c;
        let v = m.legendre_inverse_raw(&q, &xi)?;
        let f = m.norm(&q, &v);
        Ok(v / f)
    };
    let frame = sub.tangent_frame(u);
    let k = frame.ncols();
    let g = m.fundamental(p, n);
    let gamma = chern(m, p, n);
    let inner = frame.transpose() * &g * &frame;
    let mut rhs = Matrix::zeros(k, k);
    for a in 0..k {
        let h = FD_EXTENSION * u[a].abs().max(1.0);
        let mut up = u.clone();
        let mut um = u.clone();
        up[a] += h;
        um[a] -= h;
        let dn = (extension(&up)? - extension(&um)?) / (2.0 * h);
        let wa = frame.column(a).into_owned();
        let cov = dn + gamma.apply_lower(&wa, n);
        let proj = frame.transpose() * (&g * cov);
        rhs.set_column(a, &(-proj));
    }
    let matrix = inner
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidInput("degenerate tangent frame".into()))?;
    Ok(ShapeOperator { frame, matrix, inner })
}

/// Second fundamental form `Pi^n(x, y) = (nabla^n_X Y)^perp` for ambient
/// tangent vectors `x`, `y`.
pub fn second_fundamental_form(m: &Metric, sub: &Submanifold, normal: &NormalVector, x: &Vector, y: &Vector) -> Result<Vector> {
    check_normal(m, sub, normal)?;
    sub.check_c2(&normal.u)?;
    let u = &normal.u;
    let p = normal.point();
    let n = normal.direction();
    let frame = sub.tangent_frame(u);
    let k = frame.ncols();
    let g = m.fundamental(p, n);
    let gamma = chern(m, p, n);
    let inner = frame.transpose() * &g * &frame;
    let helper = ShapeOperator { frame: frame.clone(), matrix: Matrix::zeros(k, k), inner: inner.clone() };
    let a = helper.coefficients(x)?;
    let b = helper.coefficients(y)?;
    let mut z = Vector::zeros(m.dim());
    for i in 0..k {
        for j in 0..k {
            let wi = frame.column(i).into_owned();
            let wj = frame.column(j).into_owned();
            z += (sub.second_derivative(u, i, j) + gamma.apply_lower(&wi, &wj)) * (a[i] * b[j]);
        }
    }
    let c = inner
        .lu()
        .solve(&(frame.transpose() * (&g * &z)))
        .ok_or_else(|| Error::InvalidInput("degenerate tangent frame".into()))?;
    Ok(z - &frame * c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalCurvatures {
    pub values: Vec<f64>,
    /// `max_i |kappa_i|`.
    pub absolute: f64,
}

pub fn principal_curvatures(m: &Metric, sub: &Submanifold, normal: &NormalVector) -> Result<PrincipalCurvatures> {
    let shape = shape_operator(m, sub, normal)?;
    let values = shape.eigenvalues();
    let absolute = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(PrincipalCurvatures { values, absolute })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    /// `min eig(A) > max eig(B)`.
    pub dominates: bool,
    pub min_eig_a: f64,
    pub max_eig_b: f64,
    /// Smallest eigenvalue of `A - B`, reported when `dominates` holds.
    pub min_eig_difference: Option<f64>,
}

/// Compare two operators that are self-adjoint for the inner product `inner`.
pub fn eigen_dominance_check(a: &Matrix, b: &Matrix, inner: &Matrix) -> Result<DominanceReport> {
    let tol = 1e-9 * (1.0 + a.amax() + b.amax()) * (1.0 + inner.amax());
    let sa = inner * a;
    let sb = inner * b;
    let asym = linalg::asymmetry(&sa).max(linalg::asymmetry(&sb));
    if asym > tol {
        return Err(Error::NotSelfAdjoint { asymmetry: asym });
    }
    let ea = generalized_symmetric_eigenvalues(&sa, inner)
        .ok_or_else(|| Error::InvalidInput("inner product is not positive definite".into()))?;
    let eb = generalized_symmetric_eigenvalues(&sb, inner)
        .ok_or_else(|| Error::InvalidInput("inner product is not positive definite".into()))?;
    let min_a = ea.first().copied().unwrap_or(f64::INFINITY);
    let max_b = eb.last().copied().unwrap_or(f64::NEG_INFINITY);
    let dominates = min_a > max_b;
    let min_eig_difference = if dominates {
        generalized_symmetric_eigenvalues(&(sa - sb), inner).and_then(|v| v.first().copied())
    } else {
        None
    };
    Ok(DominanceReport { dominates, min_eig_a: min_a, max_eig_b: max_b, min_eig_difference })
}

// ----------------------------------------------------------------------
// Immersions.
// ----------------------------------------------------------------------

/// Ellipse `c + (a cos u, b sin u)`, counter-clockwise; a circle when `a = b`.
#[derive(Debug, Clone)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub a: f64,
    pub b: f64,
}

impl Immersion for Ellipse {
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
        Vector::from_vec(vec![self.center[0] + self.a * u[0].cos(), self.center[1] + self.b * u[0].sin()])
    }
    fn tangent_frame(&self, u: &[f64]) -> Matrix {
        Matrix::from_column_slice(2, 1, &[-self.a * u[0].sin(), self.b * u[0].cos()])
    }
    fn second_derivative(&self, u: &[f64], _a: usize, _b: usize) -> Vector {
        Vector::from_vec(vec![-self.a * u[0].cos(), -self.b * u[0].sin()])
    }
}

/// Straight line `p + u d` for `u` in a parameter interval.
#[derive(Debug, Clone)]
pub struct Line {
    pub origin: Vec<f64>,
    pub direction: Vec<f64>,
    pub range: (f64, f64),
}

impl Immersion for Line {
    fn ambient_dim(&self) -> usize {
        self.origin.len()
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![self.range.0], vec![self.range.1])
    }
    fn periodic(&self) -> Vec<bool> {
        vec![false]
    }
    fn point(&self, u: &[f64]) -> Vector {
        Vector::from_iterator(self.origin.len(), self.origin.iter().zip(&self.direction).map(|(o, d)| o + u[0] * d))
    }
    fn tangent_frame(&self, _u: &[f64]) -> Matrix {
        Matrix::from_column_slice(self.direction.len(), 1, &self.direction)
    }
    fn second_derivative(&self, _u: &[f64], _a: usize, _b: usize) -> Vector {
        Vector::zeros(self.origin.len())
    }
}

/// A single point, a submanifold of dimension zero.
#[derive(Debug, Clone)]
pub struct PointSet {
    pub point: Vec<f64>,
}

impl Immersion for PointSet {
    fn ambient_dim(&self) -> usize {
        self.point.len()
    }
    fn param_dim(&self) -> usize {
        0
    }
    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        (Vec::new(), Vec::new())
    }
    fn periodic(&self) -> Vec<bool> {
        Vec::new()
    }
    fn point(&self, _u: &[f64]) -> Vector {
        Vector::from_column_slice(&self.point)
    }
    fn tangent_frame(&self, _u: &[f64]) -> Matrix {
        Matrix::zeros(self.point.len(), 0)
    }
}

/// Closed curve through the origin that agrees with `y = |x|^(3/2)` near
/// the origin and with the circle of radius 1 centred at `(0, 1)` elsewhere:
///
/// `x = sin u`, `y = w(u) |sin u|^(3/2) + (1 - w(u)) (1 - cos u)`
///
/// with a smooth cutoff `w = 1` on `|u| <= 0.3` and `w = 0` on `|u| >= 0.6`.
/// The curve is C1 but not C2 at `u = 0`.
#[derive(Debug, Clone, Default)]
pub struct X32Curve;

impl X32Curve {
    const INNER: f64 = 0.3;
    const OUTER: f64 = 0.6;

    fn bump(s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    }

    fn cutoff(u: f64) -> f64 {
        let s = (Self::OUTER - u.abs()) / (Self::OUTER - Self::INNER);
        let a = Self::bump(s);
        let b = Self::bump(1.0 - s);
        if a + b == 0.0 {
            0.0
        } else {
            a / (a + b)
        }
    }
}

impl Immersion for X32Curve {
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
        let u = u[0];
        let w = Self::cutoff(u);
        let s = u.sin();
        let y = w * s.abs().powf(1.5) + (1.0 - w) * (1.0 - u.cos());
        Vector::from_vec(vec![s, y])
    }
    fn smoothness(&self) -> Smoothness {
        Smoothness::C1Only
    }
    fn singular_params(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0]]
    }
}

/// Curve through tabulated points: trigonometric interpolation when
/// periodic (parameter `[-pi, pi)`), natural cubic spline otherwise
/// (parameter `[0, count - 1]`).
#[derive(Debug, Clone)]
pub struct ParamTable {
    dim: usize,
    periodic: bool,
    count: usize,
    // Periodic: per coordinate (a_0, a_k, b_k). Spline: per coordinate values
    // and second derivatives.
    coeffs: Vec<(Vec<f64>, Vec<f64>)>,
    values: Vec<Vec<f64>>,
}

impl ParamTable {
    pub fn new(points: &[Vec<f64>], periodic: bool) -> Result<Self> {
        let count = points.len();
        if count < 3 {
            return Err(Error::InvalidInput("param_table needs at least 3 points".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput("param_table points have inconsistent dimensions".into()));
        }
        let values: Vec<Vec<f64>> = (0..dim).map(|c| points.iter().map(|p| p[c]).collect()).collect();
        let coeffs = if periodic {
            values.iter().map(|v| Self::fourier(v)).collect()
        } else {
            values.iter().map(|v| (Self::spline_second(v), Vec::new())).collect()
        };
        Ok(Self { dim, periodic, count, coeffs, values })
    }

    /// Real DFT coefficients `(a, b)` with samples at `u_j = -pi + 2 pi j / N`.
    fn fourier(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = v.len();
        let kmax = n / 2;
        let mut a = vec![0.0; kmax + 1];
        let mut b = vec![0.0; kmax + 1];
        for k in 0..=kmax {
            for (j, val) in v.iter().enumerate() {
                let u = -PI + 2.0 * PI * j as f64 / n as f64;
                a[k] += val * (k as f64 * u).cos();
                b[k] += val * (k as f64 * u).sin();
            }
            let w = if k == 0 || (n % 2 == 0 && k == kmax) { 1.0 } else { 2.0 };
            a[k] *= w / n as f64;
            b[k] *= w / n as f64;
        }
        (a, b)
    }

    /// Second derivatives of the natural cubic spline through `v` at unit spacing.
    fn spline_second(v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let rhs = 6.0 * (v[i + 1] - 2.0 * v[i] + v[i - 1]);
            let denom = 4.0 - c[i - 1];
            c[i] = 1.0 / denom;
            d[i] = (rhs - d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        m
    }

    fn eval(&self, u: f64, order: usize) -> Vector {
        Vector::from_fn(self.dim, |c, _| {
            if self.periodic {
                let (a, b) = &self.coeffs[c];
                let mut acc = 0.0;
                for k in 0..a.len() {
                    let kf = k as f64;
                    let (cs, sn) = ((kf * u).cos(), (kf * u).sin());
                    acc += match order {
                        0 => a[k] * cs + b[k] * sn,
                        1 => kf * (-a[k] * sn + b[k] * cs),
                        _ => -kf * kf * (a[k] * cs + b[k] * sn),
                    };
                }
                acc
            } else {
                let m = &self.coeffs[c].0;
                let v = &self.values[c];
                let i = (u.floor().max(0.0) as usize).min(self.count - 2);
                let t = u - i as f64;
                let (y0, y1, m0, m1) = (v[i], v[i + 1], m[i], m[i + 1]);
                match order {
                    0 => (1.0 - t) * y0 + t * y1 + ((1.0 - t).powi(3) - (1.0 - t)) * m0 / 6.0 + (t.powi(3) - t) * m1 / 6.0,
                    1 => y1 - y0 + (-3.0 * (1.0 - t).powi(2) + 1.0) * m0 / 6.0 + (3.0 * t * t - 1.0) * m1 / 6.0,
                    _ => (1.0 - t) * m0 + t * m1,
                }
            }
        })
    }
}

impl Immersion for ParamTable {
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn param_box(&self) -> (Vec<f64>, Vec<f64>) {
        if self.periodic {
            (vec![-PI], vec![PI])
        } else {
            (vec![0.0], vec![(self.count - 1) as f64])
        }
    }
    fn periodic(&self) -> Vec<bool> {
        vec![self.periodic]
    }
    fn point(&self, u: &[f64]) -> Vector {
        self.eval(u[0], 0)
    }
    fn tangent_frame(&self, u: &[f64]) -> Matrix {
        let d = self.eval(u[0], 1);
        Matrix::from_column_slice(self.dim, 1, d.as_slice())
    }
    fn second_derivative(&self, u: &[f64], _a: usize, _b: usize) -> Vector {
        self.eval(u[0], 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn circle_inward_normal_and_curvature() {
        let e2 = corpus::euclidean_plane();
        let circle = corpus::circle(1.0);
        let side = circle.inward().unwrap();
        assert_eq!(side, CoOrientation::Positive);
        let n = hypersurface_normal(&e2, &circle, &[0.0], side).unwrap();
        assert!((n.direction() - Vector::from_vec(vec![-1.0, 0.0])).norm() < 1e-12);
        let shape = shape_operator(&e2, &circle, &n).unwrap();
        assert!((shape.matrix[(0, 0)] - 1.0).abs() < 1e-10);
        let circle2 = corpus::circle(2.0);
        let n2 = hypersurface_normal(&e2, &circle2, &[0.4], CoOrientation::Positive).unwrap();
        let k = principal_curvatures(&e2, &circle2, &n2).unwrap();
        assert!((k.values[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn second_fundamental_form_of_unit_circle() {
        let e2 = corpus::euclidean_plane();
        let circle = corpus::circle(1.0);
        let n = hypersurface_normal(&e2, &circle, &[0.7], CoOrientation::Positive).unwrap();
        let t = circle.tangent_frame(&[0.7]).column(0).into_owned();
        let pi = second_fundamental_form(&e2, &circle, &n, &t, &t).unwrap();
        assert!((pi - n.direction()).norm() < 1e-9);
    }

    #[test]
    fn line_shape_operator_vanishes() {
        let e2 = corpus::euclidean_plane();
        let line = corpus::x_axis();
        let n = hypersurface_normal(&e2, &line, &[0.3], CoOrientation::Positive).unwrap();
        assert!(shape_operator(&e2, &line, &n).unwrap().matrix.amax() < 1e-12);
    }

    #[test]
    fn randers_normal_to_x_axis_matches_angular_scan() {
        let rd = corpus::randers_plane();
        let line = corpus::x_axis();
        let n = unit_normal_sample(&rd, &line, &[0.0], &Vector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!(normal_residual(&rd, &line, &n) <= 1e-8);
        // Oracle: sign change of g_v(v, e1) over the upper half circle.
        let origin = Vector::zeros(2);
        let h = |th: f64| {
            let v = Vector::from_vec(vec![th.cos(), th.sin()]);
            rd.legendre_raw(&origin, &v)[0]
        };
        let mut lo = 0.01;
        let mut hi = PI - 0.01;
        assert!(h(lo) * h(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(lo) * h(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let d = n.direction();
        let angle = d[1].atan2(d[0]);
        assert!((angle - lo).abs() < 1e-8, "{angle} vs {lo}");
    }

    #[test]
    fn ellipse_vertex_curvature() {
        let e2 = corpus::euclidean_plane();
        let ell = corpus::ellipse(2.0, 1.0);
        let n = hypersurface_normal(&e2, &ell, &[0.0], CoOrientation::Positive).unwrap();
        let k = principal_curvatures(&e2, &ell, &n).unwrap();
        assert!((k.values[0] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn shape_operator_constructions_agree() {
        for m in [corpus::euclidean_plane(), corpus::randers_plane(), corpus::sphere_stereographic()] {
            let ell = corpus::ellipse(0.8, 0.5);
            for u in [0.0, 0.9, 2.5] {
                for side in [CoOrientation::Positive, CoOrientation::Negative] {
                    let n = hypersurface_normal(&m, &ell, &[u], side).unwrap();
                    let a = shape_operator(&m, &ell, &n).unwrap().matrix[(0, 0)];
                    let b = shape_operator_by_extension(&m, &ell, &n).unwrap().matrix[(0, 0)];
                    assert!((a - b).abs() < 1e-6, "{} u={u}: {a} vs {b}", m.name());
                }
            }
        }
    }

    #[test]
    fn reversed_metric_flips_shape_operator() {
        let rd = corpus::randers_plane();
        let rev = rd.reverse();
        let ell = corpus::ellipse(2.0, 1.0);
        let n = hypersurface_normal(&rd, &ell, &[0.6], CoOrientation::Positive).unwrap();
        let mut nbar = n.clone();
        nbar.vector.components = -n.direction();
        let a = shape_operator(&rd, &ell, &n).unwrap().matrix[(0, 0)];
        let abar = shape_operator(&rev, &ell, &nbar).unwrap().matrix[(0, 0)];
        assert!((a + abar).abs() < 1e-9);
    }

    #[test]
    fn x32_curve_rejects_curvature_at_the_origin() {
        let e2 = corpus::euclidean_plane();
        let c = corpus::x32_curve();
        let n = hypersurface_normal(&e2, &c, &[0.0], CoOrientation::Positive).unwrap();
        assert!((n.direction() - Vector::from_vec(vec![0.0, 1.0])).norm() < 1e-9);
        assert!(matches!(shape_operator(&e2, &c, &n), Err(Error::NotC2 { .. })));
        let n = hypersurface_normal(&e2, &c, &[0.1], CoOrientation::Positive).unwrap();
        assert!(shape_operator(&e2, &c, &n).is_ok());
    }

    #[test]
    fn dominance_examples() {
        let i = Matrix::identity(2, 2);
        let r = eigen_dominance_check(&(&i * 2.0), &i, &i).unwrap();
        assert!(r.dominates);
        assert!((r.min_eig_difference.unwrap() - 1.0).abs() < 1e-12);
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 1.0]));
        let b = Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 2.0]));
        assert!(!eigen_dominance_check(&a, &b, &i).unwrap().dominates);
        let skew = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(eigen_dominance_check(&skew, &i, &i), Err(Error::NotSelfAdjoint { .. })));
    }

    #[test]
    fn param_table_reproduces_circle() {
        let n = 64;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let u = -PI + 2.0 * PI * j as f64 / n as f64;
                vec![u.cos(), u.sin()]
            })
            .collect();
        let table = ParamTable::new(&pts, true).unwrap();
        let u = [0.123];
        assert!((table.point(&u) - Vector::from_vec(vec![0.123f64.cos(), 0.123f64.sin()])).norm() < 1e-12);
        let spline = ParamTable::new(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 4.0], vec![3.0, 9.0]], false).unwrap();
        assert!((spline.point(&[2.0]) - Vector::from_vec(vec![2.0, 4.0])).norm() < 1e-12);
    }
}
