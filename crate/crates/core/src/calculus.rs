//! Gradient and hessian of scalar functions, and the shape operator of a
//! level set computed from the hessian.
//!
//! With `V = grad f` as reference vector, the hessian is
//! `Hess f (X, Y) = XY(f) - (nabla^V_X Y)(f) = g_V(nabla^V_X V, Y)`; both forms
//! are available for cross-checking. Test fields `X`, `Y` are the constant
//! coordinate extensions of the given vectors.

use std::sync::Arc;

use crate::distance::{point_distance_value, submanifold_minima, DistanceOptions};
use crate::error::{Error, Result};
use crate::geodesic::chern;
use crate::metric::{ChartDomain, Covector, Metric, SymmetricBilinear, TangentVector};
use crate::submanifold::{annihilator_basis, ShapeOperator, Submanifold};
use crate::{Matrix, Vector};

pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type DifferentialFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Step of the first differences of `f`.
const FD_FIRST: f64 = 1e-5;
/// Step of plain second differences of `f`.
const FD_SECOND: f64 = 1e-4;
/// Step for differentiating a gradient that is itself a finite difference.
const FD_GRADIENT: f64 = 1e-3;

#[derive(Clone)]
pub struct ScalarField {
    f: ScalarFn,
    df: Option<DifferentialFn>,
    domain: ChartDomain,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("ScalarField")
            .field("analytic_differential", &self.df.is_some())
            .field("domain", &self.domain)
            .finish()
    }
}

impl ScalarField {
    pub fn new(f: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), df: None, domain: ChartDomain::Unbounded }
    }

    pub fn with_differential(mut self, df: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_domain(mut self, domain: ChartDomain) -> Self {
        self.domain = domain;
        self
    }

    /// `x -> d(q, x)`.
    pub fn distance_from_point(m: &Metric, q: &Vector, opts: DistanceOptions) -> Self {
        let (m, q) = (m.clone(), q.clone());
        let domain = m.domain().clone();
        Self::new(move |x| point_distance_value(&m, &q, x, &opts).unwrap_or(f64::NAN)).with_domain(domain)
    }

    /// `x -> d(x, q)`, whose level sets are backward spheres about `q`.
    pub fn distance_to_point(m: &Metric, q: &Vector, opts: DistanceOptions) -> Self {
        let (m, q) = (m.clone(), q.clone());
        let domain = m.domain().clone();
        Self::new(move |x| point_distance_value(&m, x, &q, &opts).unwrap_or(f64::NAN)).with_domain(domain)
    }

    /// `x -> d(N, x)`.
    pub fn distance_from_submanifold(m: &Metric, sub: &Submanifold, opts: DistanceOptions) -> Self {
        let (m, sub) = (m.clone(), sub.clone());
        let domain = m.domain().clone();
        Self::new(move |x| submanifold_minima(&m, &sub, x, &opts).map(|r| r.value()).unwrap_or(f64::NAN))
            .with_domain(domain)
    }

    pub fn value(&self, p: &Vector) -> f64 {
        (self.f)(p)
    }

    fn check(&self, p: &Vector) -> Result<()> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideChart { point: p.iter().copied().collect() });
        }
        Ok(())
    }

    /// Coordinate differential `df_p`.
    pub fn differential(&self, p: &Vector) -> Result<Vector> {
        self.check(p)?;
        if let Some(df) = &self.df {
            return Ok(df(p));
        }
        let h = FD_FIRST * p.norm().max(1.0);
        let mut out = Vector::zeros(p.len());
        for k in 0..p.len() {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp[k] += h;
            pm[k] -= h;
            out[k] = ((self.f)(&pp) - (self.f)(&pm)) / (2.0 * h);
        }
        if out.iter().any(|c| !c.is_finite()) {
            return Err(Error::OutsideChart { point: p.iter().copied().collect() });
        }
        Ok(out)
    }

    /// Coordinate second derivatives `d_j d_k f`.
    pub fn second_differential(&self, p: &Vector) -> Result<Matrix> {
        self.check(p)?;
        let n = p.len();
        let scale = p.norm().max(1.0);
        let mut out = Matrix::zeros(n, n);
        if let Some(df) = &self.df {
            let h = FD_FIRST * scale;
            for k in 0..n {
                let mut pp = p.clone();
                let mut pm = p.clone();
                pp[k] += h;
                pm[k] -= h;
                out.set_column(k, &((df(&pp) - df(&pm)) / (2.0 * h)));
            }
            return Ok(crate::linalg::symmetrize(&out));
        }
        let h = FD_SECOND * scale;
        let f = |x: &Vector| (self.f)(x);
        let f0 = f(p);
        for j in 0..n {
            for k in j..n {
                let v = if j == k {
                    let mut pp = p.clone();
                    let mut pm = p.clone();
                    pp[j] += h;
                    pm[j] -= h;
                    (f(&pp) - 2.0 * f0 + f(&pm)) / (h * h)
                } else {
                    let shifted = |a: f64, b: f64| {
                        let mut q = p.clone();
                        q[j] += a * h;
                        q[k] += b * h;
                        f(&q)
                    };
                    (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0)) / (4.0 * h * h)
                };
                out[(j, k)] = v;
                out[(k, j)] = v;
            }
        }
        Ok(out)
    }
}

fn nonsingular_differential(f: &ScalarField, p: &Vector) -> Result<Vector> {
    let df = f.differential(p)?;
    if df.norm() <= 1e-12 {
        return Err(Error::SingularPoint { point: p.iter().copied().collect() });
    }
    Ok(df)
}

/// `grad f = L^{-1}(df)`.
pub fn gradient(m: &Metric, f: &ScalarField, p: &Vector) -> Result<TangentVector> {
    if !m.contains(p) {
        return Err(Error::OutsideChart { point: p.iter().copied().collect() });
    }
    let df = nonsingular_differential(f, p)?;
    m.legendre_inverse(&Covector::new(p.clone(), df))
}

/// Hessian from `XY(f) - (nabla^{grad f}_X Y)(f)`.
pub fn hessian(m: &Metric, f: &ScalarField, p: &Vector) -> Result<SymmetricBilinear> {
    let grad = gradient(m, f, p)?;
    let df = nonsingular_differential(f, p)?;
    let d2 = f.second_differential(p)?;
    let gamma = chern(m, p, &grad.components);
    let n = m.dim();
    let mut h = d2;
    for j in 0..n {
        for k in 0..n {
            let mut acc = 0.0;
            for l in 0..n {
                acc += df[l] * gamma.get(l, j, k);
            }
            h[(j, k)] -= acc;
        }
    }
    Ok(SymmetricBilinear { point: p.clone(), reference: grad.components, matrix: h })
}

/// Hessian from `g_{grad f}(nabla^{grad f}_X grad f, Y)`. The result is not
/// symmetrized, so its asymmetry measures the numerical error.
pub fn hessian_by_gradient(m: &Metric, f: &ScalarField, p: &Vector) -> Result<SymmetricBilinear> {
    let grad = gradient(m, f, p)?.components;
    let n = m.dim();
    let h = FD_GRADIENT * p.norm().max(1.0);
    let g = m.fundamental(p, &grad);
    let gamma = chern(m, p, &grad);
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pp = p.clone();
        let mut pm = p.clone();
        pp[j] += h;
        pm[j] -= h;
        let dgrad = (gradient(m, f, &pp)?.components - gradient(m, f, &pm)?.components) / (2.0 * h);
        let mut e = Vector::zeros(n);
        e[j] = 1.0;
        let cov = dgrad + gamma.apply_lower(&e, &grad);
        out.set_row(j, &(&g * cov).transpose());
    }
    Ok(SymmetricBilinear { point: p.clone(), reference: grad, matrix: out })
}

/// Shape operator of the level set `f^{-1}(f(p))` for the unit normal
/// `n = grad f / F(grad f)`, from `g_n(A_n x, y) = -Hess f(x, y) / F(grad f)`.
/// The frame is a Euclidean orthonormal basis of `ker df_p`.
pub fn level_set_shape(m: &Metric, f: &ScalarField, p: &Vector) -> Result<ShapeOperator> {
    let hess = hessian(m, f, p)?;
    let grad = &hess.reference;
    let df = nonsingular_differential(f, p)?;
    let norm = m.norm(p, grad);
    let frame = annihilator_basis(&Matrix::from_column_slice(df.len(), 1, df.as_slice()));
    let g = m.fundamental(p, grad);
    let inner = frame.transpose() * g * &frame;
    let s = -(frame.transpose() * &hess.matrix * &frame) / norm;
    let matrix = inner
        .clone()
        .lu()
        .solve(&s)
        .ok_or_else(|| Error::InvalidInput("degenerate level-set frame".into()))?;
    Ok(ShapeOperator { frame, matrix, inner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    #[test]
    fn euclidean_gradient_of_coordinate() {
        let e2 = corpus::euclidean_plane();
        let f = ScalarField::new(|x| x[0]);
        let g = gradient(&e2, &f, &v2(0.3, -2.0)).unwrap();
        assert!((g.components - v2(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn half_square_norm_has_identity_hessian() {
        let e2 = corpus::euclidean_plane();
        let f = ScalarField::new(|x| 0.5 * x.norm_squared());
        let h = hessian(&e2, &f, &v2(0.4, 0.7)).unwrap();
        assert!((h.matrix - Matrix::identity(2, 2)).amax() < 1e-6);
        assert!(matches!(gradient(&e2, &f, &v2(0.0, 0.0)), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn distance_hessian_at_unit_radius() {
        let e2 = corpus::euclidean_plane();
        let f = ScalarField::distance_from_point(&e2, &v2(0.0, 0.0), DistanceOptions::default());
        let h = hessian(&e2, &f, &v2(1.0, 0.0)).unwrap();
        assert!((h.matrix[(1, 1)] - 1.0).abs() < 1e-4);
        assert!(h.matrix[(0, 0)].abs() < 1e-4 && h.matrix[(0, 1)].abs() < 1e-4);
        let shape = level_set_shape(&e2, &f, &v2(1.0, 0.0)).unwrap();
        assert!((shape.matrix[(0, 0)] + 1.0).abs() < 1e-4);
    }

    #[test]
    fn two_hessian_formulas_agree_on_randers() {
        let rd = corpus::randers_plane();
        let f = ScalarField::new(|x| (x[0] * 1.3).sin() + x[1] * x[1] * x[0] + 0.2 * x[1]);
        let p = v2(0.3, 0.5);
        let a = hessian(&rd, &f, &p).unwrap().matrix;
        let b = hessian_by_gradient(&rd, &f, &p).unwrap().matrix;
        assert!((&a - &b).amax() < 1e-5, "{a} {b}");
        assert!(crate::linalg::asymmetry(&a) < 1e-6);
    }
}
