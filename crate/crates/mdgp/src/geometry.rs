//! Rigid-geometry utilities: mirror reflection across a plane through three
//! points, and the orthogonal Procrustes error measure between two point sets.

use crate::linalg::svd_small;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("the three plane points are (nearly) collinear")]
    DegeneratePlane,
}

#[derive(Debug, Error)]
pub enum AlignmentError {
    #[error("shape mismatch: left has {left} atoms, right has {right}")]
    ShapeMismatch { left: usize, right: usize },
    #[error("procrustes alignment requires d = 3, got {0}")]
    DimensionNot3(usize),
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Reflection of `p` across the plane through `q1`, `q2`, `q3`:
/// `r(p) = p - 2 ((p - q1) . n) n` with `n` the unit plane normal.
/// An involution; points on the plane are fixed.
pub fn plane_reflection(
    p: [f64; 3],
    q1: [f64; 3],
    q2: [f64; 3],
    q3: [f64; 3],
) -> Result<[f64; 3], GeometryError> {
    let e1 = sub(q2, q1);
    let e2 = sub(q3, q1);
    let n = cross(e1, e2);
    let nn = norm(n);
    if nn <= 1e-10 * norm(e1) * norm(e2) {
        return Err(GeometryError::DegeneratePlane);
    }
    let unit = [n[0] / nn, n[1] / nn, n[2] / nn];
    let h = dot(sub(p, q1), unit);
    Ok([
        p[0] - 2.0 * h * unit[0],
        p[1] - 2.0 * h * unit[1],
        p[2] - 2.0 * h * unit[2],
    ])
}

/// Result of the Procrustes alignment of a solution against a reference.
#[derive(Debug, Clone)]
pub struct AlignmentReport {
    /// Orthogonal 3x3 map applied to the centered solution (may be improper:
    /// distances cannot distinguish chirality, so no determinant correction).
    pub q: [f64; 9],
    /// Per-atom relative errors after alignment, infinity norm on 3-vectors
    /// with a `max(1, .)` damping in the denominator.
    pub per_atom_error: Vec<f64>,
    /// The maximum of `per_atom_error`.
    pub max_error: f64,
}

/// Orthogonal Procrustes error between a solution `x_star` and a reference
/// `x_bar`, both given as `3 x n_p` column sets in atom-major flat storage
/// (atom `j` at `coords[3 j .. 3 j + 3]`). Both sets are centered, the
/// optimal orthogonal map `Q = V U^T` comes from the SVD of the
/// cross-covariance, and the per-atom error is
/// `||[Q X* J - Xbar J]_j||_inf / max(1, ||[Xbar J]_j||_inf)`.
pub fn procrustes_error(x_star: &[f64], x_bar: &[f64]) -> Result<AlignmentReport, AlignmentError> {
    if x_star.len() != x_bar.len() {
        return Err(AlignmentError::ShapeMismatch {
            left: x_star.len() / 3,
            right: x_bar.len() / 3,
        });
    }
    if x_star.len() % 3 != 0 || x_star.is_empty() {
        return Err(AlignmentError::DimensionNot3(x_star.len()));
    }
    let n_p = x_star.len() / 3;
    let centered = |x: &[f64]| -> Vec<f64> {
        let mut mean = [0.0f64; 3];
        for j in 0..n_p {
            for a in 0..3 {
                mean[a] += x[3 * j + a];
            }
        }
        for m in mean.iter_mut() {
            *m /= n_p as f64;
        }
        let mut out = x.to_vec();
        for j in 0..n_p {
            for a in 0..3 {
                out[3 * j + a] -= mean[a];
            }
        }
        out
    };
    let xs = centered(x_star);
    let xb = centered(x_bar);
    // C = (X* J)(Xbar J)^T, 3x3
    let mut c = [0.0f64; 9];
    for j in 0..n_p {
        for a in 0..3 {
            for b in 0..3 {
                c[a * 3 + b] += xs[3 * j + a] * xb[3 * j + b];
            }
        }
    }
    let svd = svd_small(&c);
    // Q = V U^T
    let mut q = [0.0f64; 9];
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += svd.v[a * 3 + k] * svd.u[b * 3 + k];
            }
            q[a * 3 + b] = acc;
        }
    }
    let mut per_atom_error = Vec::with_capacity(n_p);
    let mut max_error = 0.0f64;
    for j in 0..n_p {
        let mut diff_inf = 0.0f64;
        let mut ref_inf = 0.0f64;
        for a in 0..3 {
            let mut mapped = 0.0;
            for b in 0..3 {
                mapped += q[a * 3 + b] * xs[3 * j + b];
            }
            diff_inf = diff_inf.max((mapped - xb[3 * j + a]).abs());
            ref_inf = ref_inf.max(xb[3 * j + a].abs());
        }
        let e = diff_inf / ref_inf.max(1.0);
        per_atom_error.push(e);
        max_error = max_error.max(e);
    }
    Ok(AlignmentReport {
        q,
        per_atom_error,
        max_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn axis_reflection() {
        let r = plane_reflection(
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
        )
        .unwrap();
        assert!((r[0]).abs() < 1e-15 && (r[1]).abs() < 1e-15 && (r[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_on_plane_fixed() {
        let p = [0.25, 0.4, 0.0];
        let r = plane_reflection(p, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]).unwrap();
        for a in 0..3 {
            assert!((r[a] - p[a]).abs() < 1e-15);
        }
    }

    #[test]
    fn reflection_is_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let rand3 = |rng: &mut ChaCha8Rng| -> [f64; 3] {
                [
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                ]
            };
            let p = rand3(&mut rng);
            let q1 = rand3(&mut rng);
            let q2 = rand3(&mut rng);
            let q3 = rand3(&mut rng);
            let r = match plane_reflection(p, q1, q2, q3) {
                Ok(r) => r,
                Err(GeometryError::DegeneratePlane) => continue,
            };
            let rr = plane_reflection(r, q1, q2, q3).unwrap();
            for a in 0..3 {
                assert!((rr[a] - p[a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn collinear_plane_rejected() {
        assert!(plane_reflection(
            [0.0, 0.0, 1.0],
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
        )
        .is_err());
    }

    fn random_cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..3 * n).map(|_| rng.gen_range(-5.0..5.0)).collect()
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> [f64; 9] {
        // Gram-Schmidt on random columns
        loop {
            let mut cols = [[0.0f64; 3]; 3];
            for c in cols.iter_mut() {
                for v in c.iter_mut() {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
            let mut q = [[0.0f64; 3]; 3];
            let mut ok = true;
            for c in 0..3 {
                let mut v = cols[c];
                for p in 0..c {
                    let d: f64 = (0..3).map(|i| v[i] * q[p][i]).sum();
                    for i in 0..3 {
                        v[i] -= d * q[p][i];
                    }
                }
                let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n < 1e-3 {
                    ok = false;
                    break;
                }
                for i in 0..3 {
                    q[c][i] = v[i] / n;
                }
            }
            if ok {
                let mut m = [0.0f64; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        m[i * 3 + j] = q[j][i];
                    }
                }
                return m;
            }
        }
    }

    fn apply(m: &[f64; 9], x: &[f64], t: &[f64; 3]) -> Vec<f64> {
        let n = x.len() / 3;
        let mut out = vec![0.0; x.len()];
        for j in 0..n {
            for a in 0..3 {
                let mut acc = t[a];
                for b in 0..3 {
                    acc += m[a * 3 + b] * x[3 * j + b];
                }
                out[3 * j + a] = acc;
            }
        }
        out
    }

    #[test]
    fn identity_alignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = random_cloud(&mut rng, 15);
        let report = procrustes_error(&x, &x).unwrap();
        assert!(report.max_error < 1e-12);
        // Q orthogonal
        for p in 0..3 {
            for q in 0..3 {
                let dotv: f64 = (0..3).map(|i| report.q[i * 3 + p] * report.q[i * 3 + q]).sum();
                let expect = if p == q { 1.0 } else { 0.0 };
                assert!((dotv - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rigid_motion_yields_zero_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let xbar = random_cloud(&mut rng, 12);
            let rot = random_rotation(&mut rng);
            let t = [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            ];
            let xstar = apply(&rot, &xbar, &t);
            let report = procrustes_error(&xstar, &xbar).unwrap();
            assert!(report.max_error <= 1e-8, "E = {}", report.max_error);
        }
    }

    #[test]
    fn procrustes_beats_random_orthogonal_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let frob_after = |m: &[f64; 9], xs: &[f64], xb: &[f64]| -> f64 {
            let n = xs.len() / 3;
            // both inputs already centered by caller
            let mut acc = 0.0;
            for j in 0..n {
                for a in 0..3 {
                    let mut v = -xb[3 * j + a];
                    for b in 0..3 {
                        v += m[a * 3 + b] * xs[3 * j + b];
                    }
                    acc += v * v;
                }
            }
            acc.sqrt()
        };
        for _ in 0..50 {
            let xbar = random_cloud(&mut rng, 10);
            let mut noisy = xbar.clone();
            for v in noisy.iter_mut() {
                *v += rng.gen_range(-0.3..0.3);
            }
            let report = procrustes_error(&noisy, &xbar).unwrap();
            // center both the same way procrustes_error does
            let center = |x: &[f64]| -> Vec<f64> {
                let n = x.len() / 3;
                let mut mean = [0.0f64; 3];
                for j in 0..n {
                    for a in 0..3 {
                        mean[a] += x[3 * j + a];
                    }
                }
                for m in mean.iter_mut() {
                    *m /= n as f64;
                }
                let mut out = x.to_vec();
                for j in 0..n {
                    for a in 0..3 {
                        out[3 * j + a] -= mean[a];
                    }
                }
                out
            };
            let xs = center(&noisy);
            let xb = center(&xbar);
            let best = frob_after(&report.q, &xs, &xb);
            for _ in 0..1000 {
                let r = random_rotation(&mut rng);
                assert!(frob_after(&r, &xs, &xb) >= best - 1e-12);
            }
        }
    }
}
