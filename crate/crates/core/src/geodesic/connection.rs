//! Chern connection, covariant derivatives along curves and curvature.

use crate::error::{Error, Result};
use crate::linalg::Tensor3;
use crate::metric::{Metric, TangentVector};
use crate::{Matrix, Vector};

use super::nonlinear_connection;

/// Chern connection coefficients `Gamma^l_{jk}(x, y)`, stored as `(l, j, k)`.
pub fn chern(m: &Metric, x: &Vector, y: &Vector) -> Tensor3 {
    let n = m.dim();
    let g = m.fundamental(x, y);
    let ginv = g.try_inverse().unwrap_or_else(|| Matrix::from_element(n, n, f64::NAN));
    let dg = m.fundamental_dx(x, y);
    let nl = nonlinear_connection(m, x, y);
    let riemannian = m.is_riemannian();
    let cartan = if riemannian { None } else { Some(m.cartan(x, y)) };

    // Horizontal derivatives delta_k g_ij = d_k g_ij - N^m_k 2 C_ijm.
    let mut delta = Tensor3::zeros(n); // (k, i, j)
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = dg[k][(i, j)];
                if let Some(c) = &cartan {
                    for mm in 0..n {
                        v -= 2.0 * nl[(mm, k)] * c.get(i, j, mm);
                    }
                }
                delta.set(k, i, j, v);
            }
        }
    }
    let mut gamma = Tensor3::zeros(n);
    for j in 0..n {
        for k in j..n {
            for l in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += ginv[(l, i)] * (delta.get(k, i, j) + delta.get(j, i, k) - delta.get(i, j, k));
                }
                gamma.set(l, j, k, 0.5 * acc);
                gamma.set(l, k, j, 0.5 * acc);
            }
        }
    }
    gamma
}

/// Checked Chern coefficients at a tangent vector.
pub fn chern_coefficients(m: &Metric, v: &TangentVector) -> Result<Tensor3> {
    m.eval_f(v)?;
    Ok(chern(m, &v.point, &v.components))
}

/// Covariant derivative `D^W_{c'} X` at time `t` along the curve `c`, with
/// reference field `W` and field `X` given as functions of the curve parameter.
pub fn covariant_derivative(
    m: &Metric,
    curve: &dyn Fn(f64) -> Vector,
    reference: &dyn Fn(f64) -> Vector,
    field: &dyn Fn(f64) -> Vector,
    t: f64,
) -> Result<Vector> {
    let w = reference(t);
    if w.iter().all(|c| *c == 0.0) {
        return Err(Error::ZeroReference);
    }
    let p = curve(t);
    if !m.contains(&p) {
        return Err(Error::OutsideChart { point: p.iter().copied().collect() });
    }
    let h = 1e-5 * t.abs().max(1.0);
    let cdot = (curve(t + h) - curve(t - h)) / (2.0 * h);
    let xdot = (field(t + h) - field(t - h)) / (2.0 * h);
    let x = field(t);
    Ok(xdot + chern(m, &p, &w).apply_lower(&cdot, &x))
}

fn curvature_step(m: &Metric, p: &Vector) -> f64 {
    let base = if m.is_analytic() { 1e-4 } else { 1e-3 };
    base * p.norm().max(1.0)
}

/// Curvature `R^V(X, Y) Z` at `p` for a reference field `V` near `p`, with
/// `X, Y, Z` extended as constant-coefficient fields.
pub fn curvature_with_field(
    m: &Metric,
    p: &Vector,
    reference: &dyn Fn(&Vector) -> Vector,
    x: &Vector,
    y: &Vector,
    z: &Vector,
) -> Result<Vector> {
    let v = reference(p);
    if v.iter().all(|c| *c == 0.0) {
        return Err(Error::ZeroReference);
    }
    let gamma = chern(m, p, &v);
    let h = curvature_step(m, p);
    let directional = |d: &Vector| -> Tensor3 {
        let dn = d.norm();
        if dn == 0.0 {
            return Tensor3::zeros(m.dim());
        }
        let s = h / dn;
        let pp = p + d * s;
        let pm = p - d * s;
        let mut out = chern(m, &pp, &reference(&pp)).sub(&chern(m, &pm, &reference(&pm)));
        out.scale(1.0 / (2.0 * s));
        out
    };
    let dx = directional(x);
    let dy = directional(y);
    Ok(dx.apply_lower(y, z) - dy.apply_lower(x, z) + gamma.apply_lower(x, &gamma.apply_lower(y, z))
        - gamma.apply_lower(y, &gamma.apply_lower(x, z)))
}

/// `R^V(X, Y) Z` with the reference vector `v` at `p` extended to first order
/// as a parallel field, `V(q) = v - Gamma(p, v)(q - p, v)`.
pub fn curvature(m: &Metric, p: &Vector, v: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
    let gamma = chern(m, p, v);
    let field = |q: &Vector| v - gamma.apply_lower(&(q - p), v);
    curvature_with_field(m, p, &field, x, y, z).unwrap_or_else(|_| Vector::from_element(m.dim(), f64::NAN))
}

/// Checked curvature tensor at a tangent vector.
pub fn curvature_tensor(m: &Metric, v: &TangentVector, x: &Vector, y: &Vector, z: &Vector) -> Result<Vector> {
    m.eval_f(v).map_err(|e| if e == Error::ZeroVector { Error::ZeroReference } else { e })?;
    Ok(curvature(m, &v.point, &v.components, x, y, z))
}

/// Flag curvature of `span{v, w}` with flagpole `v`, without input checks.
/// Returns `None` for a degenerate flag.
pub fn flag_curvature_raw(m: &Metric, p: &Vector, v: &Vector, w: &Vector) -> Option<f64> {
    let g = m.fundamental(p, v);
    let gvv = v.dot(&(&g * v));
    let gww = w.dot(&(&g * w));
    let gvw = v.dot(&(&g * w));
    let den = gvv * gww - gvw * gvw;
    if den < 1e-12 * gvv * gww {
        return None;
    }
    let r = curvature(m, p, v, v, w, w);
    Some(r.dot(&(&g * v)) / den)
}

/// Flag curvature `K^v(span{v, w})`.
pub fn flag_curvature(m: &Metric, v: &TangentVector, w: &Vector) -> Result<f64> {
    m.eval_f(v)?;
    let g = m.fundamental(&v.point, &v.components);
    let (vv, ww) = (&v.components, w);
    let gvv = vv.dot(&(&g * vv));
    let gww = ww.dot(&(&g * ww));
    let gvw = vv.dot(&(&g * ww));
    flag_curvature_raw(m, &v.point, vv, ww).ok_or(Error::DegenerateFlag { denominator: gvv * gww - gvw * gvw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn v2(a: f64, b: f64) -> Vector {
        Vector::from_vec(vec![a, b])
    }

    /// Christoffel symbols of `phi^2 delta` written out directly.
    fn conformal_christoffel(grad_log_phi: &Vector) -> Tensor3 {
        let n = grad_log_phi.len();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t.set(i, j, k, d(i, j) * grad_log_phi[k] + d(i, k) * grad_log_phi[j] - d(j, k) * grad_log_phi[i]);
                }
            }
        }
        t
    }

    #[test]
    fn sphere_chern_is_levi_civita() {
        let sp = corpus::sphere_stereographic();
        let p = v2(0.4, -0.3);
        let s = 1.0 + p.norm_squared();
        let expected = conformal_christoffel(&(&p * (-2.0 / s)));
        let got = chern(&sp, &p, &v2(0.2, 0.9));
        assert!(got.sub(&expected).max_abs() < 1e-12);
    }

    #[test]
    fn flat_chern_and_curvature_vanish() {
        for m in [corpus::euclidean_plane(), corpus::randers_plane()] {
            let p = v2(0.1, 0.2);
            let v = v2(0.3, -1.0);
            assert_eq!(chern(&m, &p, &v).max_abs(), 0.0);
            let r = curvature(&m, &p, &v, &v2(1.0, 0.0), &v2(0.0, 1.0), &v2(1.0, 1.0));
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn constant_curvature_flags() {
        let sp = corpus::sphere_stereographic();
        let k = flag_curvature(&sp, &TangentVector::from_slices(&[0.3, 0.5], &[1.0, 0.2]), &v2(-0.4, 1.0)).unwrap();
        assert!((k - 1.0).abs() < 1e-6, "{k}");
        let hy = corpus::hyperbolic_disk();
        let k = flag_curvature(&hy, &TangentVector::from_slices(&[0.3, -0.2], &[0.5, 0.2]), &v2(0.1, 1.0)).unwrap();
        assert!((k + 1.0).abs() < 1e-6, "{k}");
    }

    #[test]
    fn degenerate_flag_is_rejected() {
        let sp = corpus::sphere_stereographic();
        let v = TangentVector::from_slices(&[0.1, 0.1], &[1.0, 2.0]);
        assert!(matches!(flag_curvature(&sp, &v, &v2(2.0, 4.0)), Err(Error::DegenerateFlag { .. })));
    }

    #[test]
    fn covariant_derivative_of_constant_field_on_flat_curve() {
        let e2 = corpus::euclidean_plane();
        let curve = |t: f64| v2(t.cos(), t * t);
        let w = |t: f64| v2(1.0, t);
        let x = |_t: f64| v2(2.0, -1.0);
        let d = covariant_derivative(&e2, &curve, &w, &x, 0.7).unwrap();
        assert!(d.norm() < 1e-9);
        let zero = |_t: f64| v2(0.0, 0.0);
        assert_eq!(covariant_derivative(&e2, &curve, &zero, &x, 0.7), Err(Error::ZeroReference));
    }
}
