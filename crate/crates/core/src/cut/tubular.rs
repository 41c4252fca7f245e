//! Numerical check that the normal exponential map is injective on the
//! normal vectors of length below epsilon.
//!
//! Images of a grid of `(normal, t)` preimages are hashed in space. A
//! collision is a pair of preimages farther apart than `delta_pre` whose
//! images lie within `delta_img`, where `delta_img` is 1.5 times the largest
//! measured grid cell in the image.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::distance::distance_to_submanifold;
use crate::error::{Error, Result};
use crate::geodesic::{accurate_options, geodesic};
use crate::ode::OdeOptions;
use crate::sampling::halton;
use crate::submanifold::{hypersurface_normal, normal_cone_sample, CoOrientation, NormalVector, Submanifold};
use crate::metric::Metric;
use crate::Vector;

use super::CutOptions;

#[derive(Debug, Clone)]
pub struct TubularReport {
    pub epsilon: f64,
    /// Radius used at each normal sample.
    pub epsilon_map: Vec<f64>,
    /// Injectivity radius supplied by the caller, if any.
    pub inj_plus: Option<f64>,
    pub collision_count: usize,
    /// Smallest image distance between preimages farther than `delta_pre`.
    pub min_pairwise_image_separation: f64,
    pub delta_img: f64,
    pub delta_pre: f64,
    pub image_points: usize,
    pub probes_tested: usize,
    pub probes_covered: usize,
    /// Largest reconstruction miss over the probes.
    pub max_probe_miss: f64,
}

struct ImagePoint {
    x: Vector,
    foot: Vector,
    tn: Vector,
}

fn grid_normals(m: &Metric, sub: &Submanifold, cell: f64) -> Result<(Vec<NormalVector>, usize)> {
    if sub.param_dim() == 1 {
        let coarse = sub.sample_params(512);
        let pts: Vec<Vector> = coarse.iter().map(|u| sub.point(u)).collect();
        let length: f64 = pts.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum();
        let count = ((length / cell).ceil() as usize).clamp(64, 20_000);
        if sub.ambient_dim() == 2 {
            let mut out = Vec::with_capacity(2 * count);
            for u in sub.sample_params(count) {
                out.push(hypersurface_normal(m, sub, &u, CoOrientation::Positive)?);
                out.push(hypersurface_normal(m, sub, &u, CoOrientation::Negative)?);
            }
            return Ok((out, 2));
        }
        let mut out = Vec::new();
        for u in sub.sample_params(count) {
            out.extend(normal_cone_sample(m, sub, &u, 16)?);
        }
        return Ok((out, 16));
    }
    if sub.param_dim() == 0 {
        let count = ((2.0 * std::f64::consts::PI / cell).ceil() as usize).clamp(64, 20_000);
        return Ok((normal_cone_sample(m, sub, &[], count)?, 1));
    }
    let mut out = Vec::new();
    let per = if sub.param_dim() + 1 == sub.ambient_dim() { 2 } else { 8 };
    for u in sub.sample_params(4096) {
        out.extend(normal_cone_sample(m, sub, &u, per)?);
    }
    Ok((out, per))
}

/// Verify that `exp` is injective on `{t n : t < epsilon}` and that the
/// image is `{x : d(N, x) < epsilon}`, the latter on `probe_count` probes.
/// Returns `EpsilonTooLarge` when collisions are found; the count is the
/// number of image points with at least one colliding partner.
pub fn tubular_verify(
    m: &Metric,
    sub: &Submanifold,
    epsilon: f64,
    probe_count: usize,
    inj_plus: Option<f64>,
    opts: &CutOptions,
) -> Result<TubularReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let diam = sub.diameter();
    let cell = diam / 400.0;
    let delta_pre = 0.25 * diam;
    let (normals, stride) = grid_normals(m, sub, cell)?;
    let ode = OdeOptions::with_tol(1e-10);
    // Rows of image points per normal, sampled at t_j = epsilon j / n_t.
    let rows: Vec<Vec<ImagePoint>> = normals
        .par_iter()
        .map(|n| {
            let speed = n.direction().norm();
            let nt = ((epsilon * speed / cell).ceil() as usize).max(2);
            let rec = geodesic(m, n.point(), n.direction(), epsilon, &ode);
            (0..nt)
                .map(|j| epsilon * j as f64 / nt as f64)
                .take_while(|t| *t <= rec.t_end())
                .map(|t| ImagePoint { x: rec.point_at(t), foot: n.point().clone(), tn: n.direction() * t })
                .collect()
        })
        .collect();
    // Largest cell: neighbours along t and along the parameter grid.
    let mut max_cell: f64 = 0.0;
    for (i, row) in rows.iter().enumerate() {
        for j in 1..row.len() {
            max_cell = max_cell.max((&row[j].x - &row[j - 1].x).norm());
        }
        let next = &rows[(i + stride) % rows.len()];
        for (a, b) in row.iter().zip(next) {
            max_cell = max_cell.max((&a.x - &b.x).norm());
        }
    }
    let delta_img = 1.5 * max_cell.max(cell);
    let points: Vec<&ImagePoint> = rows.iter().flatten().collect();
    let dim = m.dim();
    if dim > 3 {
        return Err(Error::Unsupported(format!("tubular check in dimension {dim}")));
    }
    // Flat copies avoid allocating in the pair loop.
    let xs: Vec<[f64; 3]> = points.iter().map(|p| pad(&p.x)).collect();
    let pre: Vec<([f64; 3], [f64; 3])> = points.iter().map(|p| (pad(&p.foot), pad(&p.tn))).collect();
    let key = |x: &[f64; 3]| -> [i64; 3] { [0, 1, 2].map(|k| (x[k] / delta_img).floor() as i64) };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, x) in xs.iter().enumerate() {
        grid.entry(key(x)).or_default().push(i);
    }
    let offsets: Vec<[i64; 3]> = (0..3i64.pow(dim as u32))
        .map(|c| {
            let mut o = [0i64; 3];
            let mut c = c;
            for slot in o.iter_mut().take(dim) {
                *slot = c % 3 - 1;
                c /= 3;
            }
            o
        })
        .collect();
    let (collisions, min_sep, first) = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let base = key(&xs[i]);
            let mut min_sep = f64::INFINITY;
            for off in &offsets {
                let cellkey = [base[0] + off[0], base[1] + off[1], base[2] + off[2]];
                let Some(bucket) = grid.get(&cellkey) else { continue };
                for &j in bucket {
                    if j <= i || dist3(&pre[i].0, &pre[j].0) + dist3(&pre[i].1, &pre[j].1) <= delta_pre {
                        continue;
                    }
                    let img = dist3(&xs[i], &xs[j]);
                    min_sep = min_sep.min(img);
                    if img < delta_img {
                        return (1usize, min_sep, Some((i, j)));
                    }
                }
            }
            (0, min_sep, None)
        })
        .reduce(
            || (0, f64::INFINITY, None),
            |a, b| (a.0 + b.0, a.1.min(b.1), if a.2.is_some() { a.2 } else { b.2 }),
        );
    if collisions > 0 {
        let (i, j) = first.expect("collision recorded");
        return Err(Error::EpsilonTooLarge {
            epsilon,
            collisions,
            first: (points[i].x.iter().copied().collect(), points[j].x.iter().copied().collect()),
        });
    }

    // Image characterization: probes with d(N, x) < epsilon are reached by
    // the minimizing N-segment from their foot.
    let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = (vec![f64::INFINITY; dim], vec![f64::NEG_INFINITY; dim]);
    for p in &points {
        for k in 0..dim {
            lo[k] = lo[k].min(p.x[k]);
            hi[k] = hi[k].max(p.x[k]);
        }
    }
    let candidates: Vec<Vector> = (0..50 * probe_count as u64)
        .map(|s| Vector::from_iterator(dim, halton(s, dim).iter().enumerate().map(|(k, v)| lo[k] + (hi[k] - lo[k]) * v)))
        .filter(|x| m.contains(x))
        .collect();
    let mut tested = 0;
    let mut covered = 0;
    let mut max_miss: f64 = 0.0;
    for chunk in candidates.chunks(4 * probe_count.max(1)) {
        if tested >= probe_count {
            break;
        }
        let results: Vec<Option<f64>> = chunk
            .par_iter()
            .map(|x| {
                let r = distance_to_submanifold(m, sub, x, &opts.distance).ok()?;
                if r.value >= epsilon || r.value < 1e-9 {
                    return None;
                }
                let v = r.initial_direction?;
                let rec = geodesic(m, &r.foot, &v, r.value, &accurate_options(m));
                Some((rec.end_point() - x).norm())
            })
            .collect();
        for miss in results.into_iter().flatten() {
            if tested >= probe_count {
                break;
            }
            tested += 1;
            max_miss = max_miss.max(miss);
            if miss <= 1e-4 {
                covered += 1;
            }
        }
    }
    Ok(TubularReport {
        epsilon,
        epsilon_map: vec![epsilon; normals.len()],
        inj_plus,
        collision_count: 0,
        min_pairwise_image_separation: min_sep,
        delta_img,
        delta_pre,
        image_points: points.len(),
        probes_tested: tested,
        probes_covered: covered,
        max_probe_miss: max_miss,
    })
}

fn pad(v: &Vector) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, c) in out.iter_mut().zip(v.iter()) {
        *o = *c;
    }
    out
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn unit_circle_tube() {
        let e2 = corpus::euclidean_plane();
        let c = corpus::circle(1.0);
        let r = tubular_verify(&e2, &c, 0.5, 50, Some(1.0), &CutOptions::default()).unwrap();
        assert_eq!(r.collision_count, 0);
        assert_eq!(r.probes_tested, 50);
        assert_eq!(r.probes_covered, 50);
        assert!(matches!(
            tubular_verify(&e2, &c, 1.2, 10, Some(1.0), &CutOptions::default()),
            Err(Error::EpsilonTooLarge { .. })
        ));
    }
}
