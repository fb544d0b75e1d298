//! Initial-point construction for the distance geometry solve: complete the
//! sparse distance data by graph shortest paths, double-center the squared
//! distances, and embed through the top positive eigenpairs (classical
//! multidimensional scaling as in Fang-O'Leary).

use crate::linalg::{frob_norm, jacobi_eigen_sym};
use crate::mdgp::{components_of, Conformation, MdgpError, MdgpInstance};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("distance graph is disconnected: components {0:?}")]
    Disconnected(Vec<Vec<usize>>),
    #[error(transparent)]
    Mdgp(#[from] MdgpError),
}

/// Connected components of the distance graph, ordered by smallest member.
pub fn connectivity_check(instance: &MdgpInstance) -> Vec<Vec<usize>> {
    let n = instance.atom_count();
    let adjacency: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|a| instance.neighbors(a).to_vec())
        .collect();
    components_of(n, &adjacency)
}

/// Dense symmetric nonnegative matrix of shortest-path-completed distances,
/// zero on the diagonal, finite everywhere for connected graphs.
#[derive(Debug, Clone)]
pub struct CompletedDistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CompletedDistanceMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionAlgorithm {
    /// Per-source Dijkstra; the default at protein scale.
    Dijkstra,
    /// The O(n^3) reference; retained as a cross-checking oracle.
    FloydWarshall,
}

/// All-pairs shortest paths over the weighted distance graph.
pub fn shortest_path_completion(
    instance: &MdgpInstance,
    algorithm: CompletionAlgorithm,
) -> Result<CompletedDistanceMatrix, EmbedError> {
    let components = connectivity_check(instance);
    if components.len() != 1 {
        return Err(EmbedError::Disconnected(components));
    }
    let n = instance.atom_count();
    let data = match algorithm {
        CompletionAlgorithm::FloydWarshall => {
            let mut d = vec![f64::INFINITY; n * n];
            for i in 0..n {
                d[i * n + i] = 0.0;
            }
            for &(i, j, w) in instance.pairs() {
                d[i * n + j] = w;
                d[j * n + i] = w;
            }
            for k in 0..n {
                for i in 0..n {
                    let dik = d[i * n + k];
                    if dik.is_infinite() {
                        continue;
                    }
                    for j in 0..n {
                        let cand = dik + d[k * n + j];
                        if cand < d[i * n + j] {
                            d[i * n + j] = cand;
                        }
                    }
                }
            }
            d
        }
        CompletionAlgorithm::Dijkstra => {
            let mut d = vec![f64::INFINITY; n * n];
            for src in 0..n {
                let row = &mut d[src * n..(src + 1) * n];
                row[src] = 0.0;
                let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
                // f64 keys are nonneg path lengths; order by bit pattern,
                // monotone for nonnegative floats
                heap.push(Reverse((0u64, src)));
                let mut done = vec![false; n];
                while let Some(Reverse((key, v))) = heap.pop() {
                    if done[v] {
                        continue;
                    }
                    let dist = f64::from_bits(key);
                    if dist > row[v] {
                        continue;
                    }
                    done[v] = true;
                    for &(w, len) in instance.neighbors(v) {
                        let cand = dist + len;
                        if cand < row[w] {
                            row[w] = cand;
                            heap.push(Reverse((cand.to_bits(), w)));
                        }
                    }
                }
            }
            d
        }
    };
    Ok(CompletedDistanceMatrix { n, data })
}

/// Double centering of the elementwise-squared distances:
/// `T = -1/2 J (D o D) J` with `J = I - (1/n) e e^T`. For exact Euclidean
/// distance matrices this is the centered Gram matrix of the points.
pub fn double_center(completed: &CompletedDistanceMatrix) -> Vec<f64> {
    let n = completed.n;
    let sq: Vec<f64> = completed.data.iter().map(|v| v * v).collect();
    let mut row_mean = vec![0.0f64; n];
    let mut total = 0.0f64;
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += sq[i * n + j];
        }
        row_mean[i] = acc / n as f64;
        total += acc;
    }
    let grand = total / (n * n) as f64;
    let mut t = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            t[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + grand);
        }
    }
    t
}

/// The `d` algebraically largest eigenpairs of a symmetric matrix by blocked
/// subspace iteration with Rayleigh-Ritz extraction. Only pairs with
/// eigenvalue above `1e-10 ||T||_F` are kept, so the result may hold fewer
/// than `d` pairs. Eigenvalues descend; each eigenvector is sign-fixed so its
/// largest-magnitude entry is positive.
pub fn top_d_eigenpairs(t: &[f64], n: usize, d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(t.len(), n * n);
    let t_norm = frob_norm(t);
    if t_norm == 0.0 || n == 0 {
        return (Vec::new(), Vec::new());
    }
    let block = (d + 3).min(n).min(8);
    // shift makes the spectrum nonnegative so the algebraically largest
    // eigenvalues dominate the power iteration
    let shift = t_norm;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d6467705f696e69);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    orthonormalize(&mut basis);
    let mat_vec = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let row = &t[i * n..(i + 1) * n];
                row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + shift * x[i]
            })
            .collect()
    };
    let tol = 1e-8 * t_norm.max(1.0);
    let mut eigvals = vec![0.0f64; block];
    let mut converged = false;
    for _iter in 0..5000 {
        let mut next: Vec<Vec<f64>> = basis.iter().map(|v| mat_vec(v)).collect();
        orthonormalize(&mut next);
        // Rayleigh-Ritz on the subspace
        let images: Vec<Vec<f64>> = next.iter().map(|v| mat_vec(v)).collect();
        let b = next.len();
        let mut small = vec![0.0; b * b];
        for p in 0..b {
            for q in 0..b {
                small[p * b + q] = dot(&next[p], &images[q]);
            }
        }
        // symmetrize rounding noise
        for p in 0..b {
            for q in (p + 1)..b {
                let avg = 0.5 * (small[p * b + q] + small[q * b + p]);
                small[p * b + q] = avg;
                small[q * b + p] = avg;
            }
        }
        let (vals, vecs) = jacobi_eigen_sym(&small, b).expect("projection is symmetric");
        // descending Ritz pairs
        let mut ritz: Vec<Vec<f64>> = Vec::with_capacity(b);
        for k in 0..b {
            let col = b - 1 - k;
            let mut v = vec![0.0; n];
            for p in 0..b {
                let coef = vecs[p * b + col];
                for i in 0..n {
                    v[i] += coef * next[p][i];
                }
            }
            ritz.push(v);
            eigvals[k] = vals[col] - shift;
        }
        basis = ritz;
        // residual check on the leading d pairs
        let check = d.min(b);
        converged = (0..check).all(|k| {
            let img = mat_vec(&basis[k]);
            let lam = eigvals[k] + shift;
            let res: f64 = img
                .iter()
                .zip(&basis[k])
                .map(|(a, v)| (a - lam * v).powi(2))
                .sum::<f64>()
                .sqrt();
            res <= tol
        });
        if converged {
            break;
        }
    }
    let _ = converged;
    let keep_tol = 1e-10 * t_norm;
    let mut out_vals = Vec::new();
    let mut out_vecs = Vec::new();
    for k in 0..d.min(basis.len()) {
        if eigvals[k] > keep_tol {
            let mut v = std::mem::take(&mut basis[k]);
            // sign convention: largest-magnitude entry positive
            let lead = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
            if v[lead] < 0.0 {
                for e in v.iter_mut() {
                    *e = -*e;
                }
            }
            out_vals.push(eigvals[k]);
            out_vecs.push(v);
        }
    }
    (out_vals, out_vecs)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthonormalize(vs: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vs.len());
    for v in vs.iter() {
        let mut w = v.clone();
        for _pass in 0..2 {
            for u in &out {
                let c = dot(&w, u);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
        let n = dot(&w, &w).sqrt();
        if n > 1e-12 {
            for wi in w.iter_mut() {
                *wi /= n;
            }
            out.push(w);
        }
    }
    *vs = out;
}

/// Options of the initial-guess construction. Perturbed variants are driven
/// by a scale factor on the coordinates and seedable jitter on the completed
/// distances; both default off.
#[derive(Debug, Clone)]
pub struct InitOptions {
    pub algorithm: CompletionAlgorithm,
    pub scale: f64,
    /// Relative jitter magnitude applied to the completed distances.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for InitOptions {
    fn default() -> Self {
        Self {
            algorithm: CompletionAlgorithm::Dijkstra,
            scale: 1.0,
            jitter: 0.0,
            seed: 0,
        }
    }
}

/// The Fang-O'Leary initial point: shortest-path completion, double
/// centering, top-d eigenpairs, coordinates `U diag(sqrt(lambda))`. Missing
/// positive eigendirections are completed with zeros.
pub fn fang_oleary_init(instance: &MdgpInstance) -> Result<Conformation, EmbedError> {
    fang_oleary_init_with(instance, &InitOptions::default())
}

pub fn fang_oleary_init_with(
    instance: &MdgpInstance,
    options: &InitOptions,
) -> Result<Conformation, EmbedError> {
    let mut completed = shortest_path_completion(instance, options.algorithm)?;
    if options.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let n = completed.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let factor = 1.0 + options.jitter * rng.gen_range(-1.0..1.0);
                let v = completed.data[i * n + j] * factor;
                completed.data[i * n + j] = v;
                completed.data[j * n + i] = v;
            }
        }
    }
    let t = double_center(&completed);
    let n = completed.n;
    let d = instance.dim();
    let (vals, vecs) = top_d_eigenpairs(&t, n, d);
    let mut coords = vec![0.0; n * d];
    for (k, (lam, v)) in vals.iter().zip(&vecs).enumerate() {
        let s = lam.sqrt() * options.scale;
        for j in 0..n {
            coords[j * d + k] = s * v[j];
        }
    }
    Ok(Conformation::new(d, coords)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::procrustes_error;
    use rand_chacha::ChaCha8Rng;

    fn path_instance(weights: &[f64]) -> MdgpInstance {
        let n = weights.len() + 1;
        let pairs: Vec<(usize, usize, f64)> = weights
            .iter()
            .enumerate()
            .map(|(i, &w)| (i, i + 1, w))
            .collect();
        MdgpInstance::new(3, n, pairs, None).unwrap()
    }

    #[test]
    fn connectivity_cases() {
        let inst = path_instance(&[1.0, 1.0]);
        assert_eq!(connectivity_check(&inst), vec![vec![0, 1, 2]]);
        let sparse = MdgpInstance::new(3, 3, vec![(0, 1, 1.0)], None).unwrap();
        assert_eq!(connectivity_check(&sparse), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn path_completion() {
        let inst = path_instance(&[1.0, 1.0]);
        for algo in [CompletionAlgorithm::FloydWarshall, CompletionAlgorithm::Dijkstra] {
            let c = shortest_path_completion(&inst, algo).unwrap();
            assert!((c.get(0, 2) - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn triangle_shortcut() {
        let pairs = vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 10.0)];
        let inst = MdgpInstance::new(3, 3, pairs, None).unwrap();
        let c = shortest_path_completion(&inst, CompletionAlgorithm::Dijkstra).unwrap();
        assert!((c.get(0, 2) - 2.0).abs() < 1e-15);
        // direct edge is never beaten upward
        assert!(c.get(0, 2) <= 10.0);
    }

    #[test]
    fn disconnected_graph_rejected_with_components() {
        let sparse = MdgpInstance::new(3, 4, vec![(0, 1, 1.0), (2, 3, 1.0)], None).unwrap();
        match shortest_path_completion(&sparse, CompletionAlgorithm::Dijkstra) {
            Err(EmbedError::Disconnected(comps)) => {
                assert_eq!(comps, vec![vec![0, 1], vec![2, 3]]);
            }
            other => panic!("expected disconnected error, got {other:?}"),
        }
    }

    fn random_connected_instance(rng: &mut ChaCha8Rng, n: usize) -> MdgpInstance {
        let mut pairs = Vec::new();
        // spanning path guarantees connectivity
        for i in 0..n - 1 {
            pairs.push((i, i + 1, rng.gen_range(0.1..4.0)));
        }
        for i in 0..n {
            for j in (i + 2)..n {
                if rng.gen_bool(0.15) {
                    pairs.push((i, j, rng.gen_range(0.1..4.0)));
                }
            }
        }
        MdgpInstance::new(3, n, pairs, None).unwrap()
    }

    #[test]
    fn dual_algorithm_agreement_and_metric_closure() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let n = rng.gen_range(20..50);
            let inst = random_connected_instance(&mut rng, n);
            let fw = shortest_path_completion(&inst, CompletionAlgorithm::FloydWarshall).unwrap();
            let dj = shortest_path_completion(&inst, CompletionAlgorithm::Dijkstra).unwrap();
            for (a, b) in fw.as_slice().iter().zip(dj.as_slice()) {
                assert!((a - b).abs() <= 1e-12);
            }
            // triangle inequality, exhaustively
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        assert!(fw.get(i, k) <= fw.get(i, j) + fw.get(j, k) + 1e-12);
                    }
                }
            }
            // known entries never exceeded
            for &(i, j, w) in inst.pairs() {
                assert!(fw.get(i, j) <= w + 1e-15);
            }
        }
    }

    #[test]
    fn double_center_two_points() {
        let c = CompletedDistanceMatrix {
            n: 2,
            data: vec![0.0, 3.0, 3.0, 0.0],
        };
        let t = double_center(&c);
        let expect = [2.25, -2.25, -2.25, 2.25];
        for (a, b) in t.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
        // zero matrix degenerates to zero
        let z = CompletedDistanceMatrix {
            n: 2,
            data: vec![0.0; 4],
        };
        assert!(double_center(&z).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn double_center_equals_centered_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let n = 14;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d2: f64 = (0..3)
                    .map(|a| (points[i][a] - points[j][a]).powi(2))
                    .sum();
                data[i * n + j] = d2.sqrt();
            }
        }
        let t = double_center(&CompletedDistanceMatrix { n, data });
        // centered Gram
        let mut mean = [0.0f64; 3];
        for p in &points {
            for a in 0..3 {
                mean[a] += p[a] / n as f64;
            }
        }
        let mut max_err = 0.0f64;
        let mut t_norm = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let gram: f64 = (0..3)
                    .map(|a| (points[i][a] - mean[a]) * (points[j][a] - mean[a]))
                    .sum();
                max_err = max_err.max((t[i * n + j] - gram).abs());
                t_norm += t[i * n + j] * t[i * n + j];
            }
        }
        assert!(max_err <= 1e-9 * t_norm.sqrt().max(1.0));
        // row sums of T are zero
        for i in 0..n {
            let rs: f64 = (0..n).map(|j| t[i * n + j]).sum();
            assert!(rs.abs() <= 1e-9 * t_norm.sqrt());
        }
    }

    #[test]
    fn eigenpairs_two_point_case() {
        let t = vec![2.25, -2.25, -2.25, 2.25];
        let (vals, vecs) = top_d_eigenpairs(&t, 2, 3);
        assert_eq!(vals.len(), 1);
        assert!((vals[0] - 4.5).abs() < 1e-9);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((vecs[0][0].abs() - inv_sqrt2).abs() < 1e-8);
        assert!((vecs[0][0] + vecs[0][1]).abs() < 1e-8);
    }

    #[test]
    fn eigenpairs_diagonal() {
        let n = 4;
        let mut t = vec![0.0; n * n];
        for (i, v) in [5.0, 3.0, 1.0, -1.0].iter().enumerate() {
            t[i * n + i] = *v;
        }
        let (vals, _) = top_d_eigenpairs(&t, n, 3);
        assert_eq!(vals.len(), 3);
        assert!((vals[0] - 5.0).abs() < 1e-8);
        assert!((vals[1] - 3.0).abs() < 1e-8);
        assert!((vals[2] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn low_rank_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let n = 20;
        // rank-3 PSD plus tiny symmetric noise
        let factors: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let mut t = vec![0.0; n * n];
        for f in &factors {
            for i in 0..n {
                for j in 0..n {
                    t[i * n + j] += f[i] * f[j];
                }
            }
        }
        let noise = 1e-8;
        for i in 0..n {
            for j in i..n {
                let e = rng.gen_range(-noise..noise);
                t[i * n + j] += e;
                if i != j {
                    t[j * n + i] += e;
                }
            }
        }
        // resymmetrize exactly
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (t[i * n + j] + t[j * n + i]);
                t[i * n + j] = avg;
                t[j * n + i] = avg;
            }
        }
        let (vals, vecs) = top_d_eigenpairs(&t, n, 3);
        assert_eq!(vals.len(), 3);
        let mut rec = vec![0.0; n * n];
        for (lam, v) in vals.iter().zip(&vecs) {
            for i in 0..n {
                for j in 0..n {
                    rec[i * n + j] += lam * v[i] * v[j];
                }
            }
        }
        let err: f64 = rec
            .iter()
            .zip(&t)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-5, "reconstruction error {err:e}");
    }

    #[test]
    fn mds_exactness_on_complete_euclidean_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..5 {
            let n = 10;
            let points: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let d: f64 = (0..3)
                        .map(|a| (points[i][a] - points[j][a]).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    pairs.push((i, j, d));
                }
            }
            let truth = Conformation::from_points(&points).unwrap();
            let inst = MdgpInstance::new(3, n, pairs, Some(truth.clone())).unwrap();
            let init = fang_oleary_init(&inst).unwrap();
            let report = procrustes_error(init.coords(), truth.coords()).unwrap();
            assert!(report.max_error <= 1e-6, "E = {:e}", report.max_error);
        }
    }

    #[test]
    fn two_point_embedding() {
        let inst = MdgpInstance::new(3, 2, vec![(0, 1, 3.0)], None).unwrap();
        let init = fang_oleary_init(&inst).unwrap();
        // points at (+-1.5, 0, 0) up to sign and order
        let a = init.atom(0);
        let b = init.atom(1);
        assert!((a[0].abs() - 1.5).abs() < 1e-8);
        assert!((b[0].abs() - 1.5).abs() < 1e-8);
        assert!((a[0] + b[0]).abs() < 1e-8);
        for k in 1..3 {
            assert!(a[k].abs() < 1e-8 && b[k].abs() < 1e-8);
        }
    }
}
