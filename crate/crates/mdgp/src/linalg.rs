//! Dense symmetric eigensolver (cyclic Jacobi) and a 3x3 SVD built on it.
//!
//! These kernels only ever see small matrices: block Hessians of dimension
//! at most 8, the 3x3 Procrustes cross-covariance, and the Rayleigh-Ritz
//! projections of the subspace iteration. Matrices are stored row-major in
//! flat `Vec<f64>` / `&[f64]` buffers.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("matrix buffer has length {len}, expected {expected} for dimension {n}")]
    BadShape { len: usize, expected: usize, n: usize },
}

/// Frobenius norm of a flat row-major matrix.
pub fn frob_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_symmetric(a: &[f64], n: usize) -> Result<(), LinalgError> {
    if a.len() != n * n {
        return Err(LinalgError::BadShape {
            len: a.len(),
            expected: n * n,
            n,
        });
    }
    let scale = frob_norm(a).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (a[i * n + j] - a[j * n + i]).abs();
            if diff > 1e-12 * scale {
                return Err(LinalgError::NotSymmetric { i, j, diff });
            }
        }
    }
    Ok(())
}

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as the columns of a row-major `n x n` matrix, so that
/// `A v_k = lambda_k v_k` with `v_k[i] = vecs[i * n + k]`.
pub fn jacobi_eigen_sym(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    check_symmetric(a, n)?;
    let mut m = a.to_vec();
    // symmetrize exactly so the sweep sees consistent off-diagonals
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = avg;
            m[j * n + i] = avg;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = frob_norm(&m).max(1e-300);
    let tol = 1e-15 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[i * n + j].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- J^T A J on rows/columns p, q
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    // sort ascending, permuting eigenvector columns accordingly
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            sorted_vecs[row * n + new_col] = v[row * n + old_col];
        }
    }
    vals = sorted_vals;
    Ok((vals, sorted_vecs))
}

/// Result of [`svd_small`]: `M = U diag(s) V^T` with singular values descending.
pub struct Svd3 {
    pub u: [f64; 9],
    pub s: [f64; 3],
    pub v: [f64; 9],
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn col3(m: &[f64; 9], j: usize) -> [f64; 3] {
    [m[j], m[3 + j], m[6 + j]]
}

fn set_col3(m: &mut [f64; 9], j: usize, v: [f64; 3]) {
    m[j] = v[0];
    m[3 + j] = v[1];
    m[6 + j] = v[2];
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// SVD of a 3x3 matrix via the symmetric eigendecomposition of `M^T M`,
/// with rank-deficient left factors completed by orthogonal extension.
pub fn svd_small(m: &[f64; 9]) -> Svd3 {
    // M^T M is symmetric PSD
    let mut mtm = [0.0f64; 9];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += m[k * 3 + i] * m[k * 3 + j];
            }
            mtm[i * 3 + j] = acc;
        }
    }
    let (vals, vecs) = jacobi_eigen_sym(&mtm, 3).expect("M^T M is symmetric by construction");
    // descending singular values
    let mut v = [0.0f64; 9];
    let mut s = [0.0f64; 3];
    for k in 0..3 {
        let src = 2 - k; // ascending -> descending
        s[k] = vals[src].max(0.0).sqrt();
        for i in 0..3 {
            v[i * 3 + k] = vecs[i * 3 + src];
        }
    }
    let mut u = [0.0f64; 9];
    let tol = 1e-13 * s[0].max(1.0);
    let mut fixed: Vec<usize> = Vec::new();
    for k in 0..3 {
        if s[k] > tol {
            let vk = col3(&v, k);
            let mut uk = [0.0f64; 3];
            for i in 0..3 {
                uk[i] = (m[i * 3] * vk[0] + m[i * 3 + 1] * vk[1] + m[i * 3 + 2] * vk[2]) / s[k];
            }
            set_col3(&mut u, k, uk);
            fixed.push(k);
        }
    }
    // complete remaining columns to an orthonormal basis
    for k in 0..3 {
        if fixed.contains(&k) {
            continue;
        }
        let candidate = match fixed.len() {
            2 => cross(col3(&u, fixed[0]), col3(&u, fixed[1])),
            1 => {
                let a = col3(&u, fixed[0]);
                // any vector not parallel to a
                let probe = if a[0].abs() < 0.9 {
                    [1.0, 0.0, 0.0]
                } else {
                    [0.0, 1.0, 0.0]
                };
                cross(a, probe)
            }
            _ => {
                let axes = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                axes[fixed.len()]
            }
        };
        let n = norm3(candidate).max(1e-300);
        set_col3(&mut u, k, [candidate[0] / n, candidate[1] / n, candidate[2] / n]);
        fixed.push(k);
    }
    // Gram-Schmidt polish: clustered singular values leave the computed
    // columns slightly non-orthogonal
    for k in 0..3 {
        let mut uk = col3(&u, k);
        for j in 0..k {
            let uj = col3(&u, j);
            let c = uk[0] * uj[0] + uk[1] * uj[1] + uk[2] * uj[2];
            for i in 0..3 {
                uk[i] -= c * uj[i];
            }
        }
        let n = norm3(uk).max(1e-300);
        set_col3(&mut u, k, [uk[0] / n, uk[1] / n, uk[2] / n]);
    }
    Svd3 { u, s, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    }

    #[test]
    fn identity_matrix() {
        let a = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let (vals, _) = jacobi_eigen_sym(&a, 3).unwrap();
        for v in vals {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_matrix() {
        let a = [-2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0];
        let (vals, vecs) = jacobi_eigen_sym(&a, 3).unwrap();
        assert!((vals[0] + 2.0).abs() < 1e-14);
        assert!(vals[1].abs() < 1e-14);
        assert!((vals[2] - 5.0).abs() < 1e-14);
        // eigenvectors are signed axis permutations
        for k in 0..3 {
            let col: Vec<f64> = (0..3).map(|i| vecs[i * 3 + k]).collect();
            let maxabs = col.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
            assert!((maxabs - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = 5;
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.gen_range(-5.0..5.0);
                    a[i * n + j] = v;
                    a[j * n + i] = v;
                }
            }
            let (vals, vecs) = jacobi_eigen_sym(&a, n).unwrap();
            let norm = frob_norm(&a).max(1.0);
            // residual per pair
            for k in 0..n {
                let vk: Vec<f64> = (0..n).map(|i| vecs[i * n + k]).collect();
                let av = mat_vec(&a, n, &vk);
                let res: f64 = av
                    .iter()
                    .zip(&vk)
                    .map(|(x, y)| (x - vals[k] * y).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-10 * norm, "residual {res:e}");
            }
            // reconstruction V L V^T = A
            let mut rec = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += vecs[i * n + k] * vals[k] * vecs[j * n + k];
                    }
                    rec[i * n + j] = acc;
                }
            }
            let err: f64 = rec
                .iter()
                .zip(&a)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-9 * norm);
            // orthonormality
            for p in 0..n {
                for q in 0..n {
                    let dot: f64 = (0..n).map(|i| vecs[i * n + p] * vecs[i * n + q]).sum();
                    let expect = if p == q { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_nonsymmetric() {
        let a = [1.0, 2.0, 0.0, 1.0];
        assert!(jacobi_eigen_sym(&a, 2).is_err());
    }

    #[test]
    fn svd_identity() {
        let m = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let svd = svd_small(&m);
        for k in 0..3 {
            assert!((svd.s[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_rank_deficient_diagonal() {
        let m = [3.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0];
        let svd = svd_small(&m);
        assert!((svd.s[0] - 3.0).abs() < 1e-10);
        assert!((svd.s[1] - 2.0).abs() < 1e-10);
        assert!(svd.s[2].abs() < 1e-10);
        check_svd(&m, &svd);
    }

    fn check_svd(m: &[f64; 9], svd: &Svd3) {
        let scale = frob_norm(m).max(1.0);
        // reconstruction
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += svd.u[i * 3 + k] * svd.s[k] * svd.v[j * 3 + k];
                }
                assert!(
                    (acc - m[i * 3 + j]).abs() <= 5e-8 * scale,
                    "reconstruction off at ({i},{j})"
                );
            }
        }
        // orthogonality of U and V
        for f in [&svd.u, &svd.v] {
            for p in 0..3 {
                for q in 0..3 {
                    let dot: f64 = (0..3).map(|i| f[i * 3 + p] * f[i * 3 + q]).sum();
                    let expect = if p == q { 1.0 } else { 0.0 };
                    assert!((dot - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn svd_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mut m = [0.0f64; 9];
            for v in m.iter_mut() {
                *v = rng.gen_range(-4.0..4.0);
            }
            let svd = svd_small(&m);
            assert!(svd.s[0] >= svd.s[1] && svd.s[1] >= svd.s[2] && svd.s[2] >= 0.0);
            check_svd(&m, &svd);
        }
    }
}
