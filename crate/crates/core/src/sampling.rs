//! Deterministic low-discrepancy samplers.

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in the given base (van der Corput sequence).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut acc = 0.0;
    while index > 0 {
        acc += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    acc
}

/// Point `index` of the Halton sequence in `[0, 1)^dim`.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "halton sampler supports up to {} dimensions", PRIMES.len());
    (0..dim).map(|d| radical_inverse(index + 1, PRIMES[d])).collect()
}

/// Uniform point on the unit sphere `S^{dim-1}` from a point of `[0,1)^{dim-1}`
/// via hyperspherical angles, area preserving in 2 and 3 dimensions.
pub fn sphere_point(unit: &[f64], dim: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    match dim {
        1 => vec![if unit.first().copied().unwrap_or(0.0) < 0.5 { 1.0 } else { -1.0 }],
        2 => {
            let a = 2.0 * PI * unit[0];
            vec![a.cos(), a.sin()]
        }
        3 => {
            let z = 1.0 - 2.0 * unit[1];
            let r = (1.0 - z * z).max(0.0).sqrt();
            let a = 2.0 * PI * unit[0];
            vec![r * a.cos(), r * a.sin(), z]
        }
        _ => {
            // Box-Muller on Halton coordinates; adequate for coverage checks.
            let mut v = Vec::with_capacity(dim);
            let mut i = 0;
            while v.len() < dim {
                let u1 = unit[i % unit.len()].clamp(1e-12, 1.0 - 1e-12);
                let u2 = unit[(i + 1) % unit.len()];
                let r = (-2.0 * u1.ln()).sqrt();
                v.push(r * (2.0 * PI * u2).cos());
                if v.len() < dim {
                    v.push(r * (2.0 * PI * u2).sin());
                }
                i += 2;
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        }
    }
}
