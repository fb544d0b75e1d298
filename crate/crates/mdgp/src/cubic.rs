//! Global minimization of the cubic-regularized quadratic model
//!
//!   min_s  g^T s + (1/2) s^T H s + sigma ||s||^3
//!
//! in small dimension. Stationarity of a global minimizer reads
//! `(H + t I) s = -g` with `t = 3 sigma ||s||` and `H + t I` positive
//! semidefinite, so `t` is the root of a scalar secular equation solved by
//! safeguarded bisection in the eigenbasis of `H`. The hard case (gradient
//! orthogonal to the bottom eigenspace) is handled by adding a bottom
//! eigenvector component. A brute-force grid oracle is provided for tests.

use crate::linalg::{frob_norm, jacobi_eigen_sym, LinalgError};
use thiserror::Error;

pub const MAX_BLOCK_DIM: usize = 8;

#[derive(Debug, Error)]
pub enum CubicError {
    #[error("block dimension {0} exceeds the supported maximum of {MAX_BLOCK_DIM}")]
    DimensionTooLarge(usize),
    #[error("model shape mismatch: g has length {g}, H has {h} entries, base has length {base}")]
    ShapeMismatch { g: usize, h: usize, base: usize },
    #[error("negative regularization weight sigma = {0}")]
    NegativeSigma(f64),
    #[error("grid oracle supports d <= 3, got {0}")]
    GridDimension(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Second-order Taylor data of a block objective at a base point:
/// `M(base + s) = f0 + g^T s + (1/2) s^T H s`.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    pub f0: f64,
    pub g: Vec<f64>,
    /// Row-major symmetric `d x d` Hessian.
    pub h: Vec<f64>,
    pub base: Vec<f64>,
}

impl QuadraticModel {
    pub fn new(f0: f64, g: Vec<f64>, h: Vec<f64>, base: Vec<f64>) -> Result<Self, CubicError> {
        let d = g.len();
        if d > MAX_BLOCK_DIM {
            return Err(CubicError::DimensionTooLarge(d));
        }
        if h.len() != d * d || base.len() != d {
            return Err(CubicError::ShapeMismatch {
                g: d,
                h: h.len(),
                base: base.len(),
            });
        }
        let scale = frob_norm(&h).max(1.0);
        for i in 0..d {
            for j in (i + 1)..d {
                if (h[i * d + j] - h[j * d + i]).abs() > 1e-12 * scale {
                    return Err(LinalgError::NotSymmetric {
                        i,
                        j,
                        diff: (h[i * d + j] - h[j * d + i]).abs(),
                    }
                    .into());
                }
            }
        }
        Ok(Self { f0, g, h, base })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// Model value at offset `s` from the base, without regularization.
    pub fn eval(&self, s: &[f64]) -> f64 {
        let d = self.dim();
        let mut v = self.f0;
        for i in 0..d {
            v += self.g[i] * s[i];
            let mut hs = 0.0;
            for j in 0..d {
                hs += self.h[i * d + j] * s[j];
            }
            v += 0.5 * s[i] * hs;
        }
        v
    }

    /// Regularized model value `M(base+s) + sigma ||s||^(p+1)` with p = 2.
    pub fn eval_regularized(&self, s: &[f64], sigma: f64) -> f64 {
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.eval(s) + sigma * norm.powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicStatus {
    /// A finite global minimizer was found.
    Minimizer,
    /// The regularized model is unbounded below (only possible at sigma = 0).
    Unbounded,
    /// The base point itself is the global minimizer (zero step).
    BaseIsMin,
}

#[derive(Debug, Clone)]
pub struct CubicSolveResult {
    /// Step `s* = z* - base`.
    pub step: Vec<f64>,
    /// `M(base + s*) + sigma ||s*||^3`; meaningless when unbounded.
    pub model_value: f64,
    /// Lagrange-type multiplier `t = 3 sigma ||s*||`.
    pub multiplier: f64,
    pub status: CubicStatus,
}

const HARD_CASE_TOL: f64 = 1e-12;
const NULLSPACE_EIG_TOL: f64 = 1e-12;
const NULLSPACE_G_TOL: f64 = 1e-10;
const SECULAR_TOL: f64 = 1e-12;

fn vec_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Global minimizer of `g^T s + (1/2) s^T H s + sigma ||s||^3`.
pub fn solve_cubic_reg_global(
    model: &QuadraticModel,
    sigma: f64,
) -> Result<CubicSolveResult, CubicError> {
    if sigma < 0.0 {
        return Err(CubicError::NegativeSigma(sigma));
    }
    let d = model.dim();
    let (lam, vecs) = jacobi_eigen_sym(&model.h, d)?;
    let lam_min = lam[0];
    let g_norm = vec_norm(&model.g);
    // gradient in the eigenbasis: ghat_k = v_k^T g
    let ghat: Vec<f64> = (0..d)
        .map(|k| (0..d).map(|i| vecs[i * d + k] * model.g[i]).sum())
        .collect();

    let from_eigen = |shat: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|i| (0..d).map(|k| vecs[i * d + k] * shat[k]).sum())
            .collect()
    };
    let finish = |shat: Vec<f64>, t: f64| -> CubicSolveResult {
        let step = from_eigen(&shat);
        let value = model.eval_regularized(&step, sigma);
        let status = if vec_norm(&step) == 0.0 {
            CubicStatus::BaseIsMin
        } else {
            CubicStatus::Minimizer
        };
        CubicSolveResult {
            step,
            model_value: value,
            multiplier: t,
            status,
        }
    };

    if sigma == 0.0 {
        // pure quadratic: Newton step if H is PSD and g in range(H)
        if lam_min < -NULLSPACE_EIG_TOL * frob_norm(&model.h).max(1.0) {
            return Ok(CubicSolveResult {
                step: vec![0.0; d],
                model_value: f64::NEG_INFINITY,
                multiplier: 0.0,
                status: CubicStatus::Unbounded,
            });
        }
        let eig_tol = NULLSPACE_EIG_TOL * frob_norm(&model.h).max(1.0);
        let mut shat = vec![0.0; d];
        for k in 0..d {
            if lam[k].abs() <= eig_tol {
                if ghat[k].abs() > NULLSPACE_G_TOL * g_norm.max(1e-300) {
                    // descent direction along a null eigenvector: unbounded
                    return Ok(CubicSolveResult {
                        step: vec![0.0; d],
                        model_value: f64::NEG_INFINITY,
                        multiplier: 0.0,
                        status: CubicStatus::Unbounded,
                    });
                }
                shat[k] = 0.0;
            } else {
                shat[k] = -ghat[k] / lam[k];
            }
        }
        return Ok(finish(shat, 0.0));
    }

    // sigma > 0. t ranges over [t_lo, inf) with t_lo = max(0, -lam_min).
    let t_lo = (-lam_min).max(0.0);
    let norm_at = |t: f64| -> f64 {
        let mut acc = 0.0;
        for k in 0..d {
            let denom = lam[k] + t;
            if denom > 0.0 {
                let sk = ghat[k] / denom;
                acc += sk * sk;
            } else if ghat[k] != 0.0 {
                return f64::INFINITY;
            }
        }
        acc.sqrt()
    };
    let step_at = |t: f64| -> Vec<f64> {
        (0..d)
            .map(|k| {
                let denom = lam[k] + t;
                if denom.abs() > 0.0 {
                    -ghat[k] / denom
                } else {
                    0.0
                }
            })
            .collect()
    };

    if g_norm == 0.0 {
        if lam_min >= 0.0 {
            return Ok(finish(vec![0.0; d], 0.0));
        }
        // pure hard case: step along the bottom eigenvector with ||s|| = t/(3 sigma)
        let t = t_lo;
        let r = t / (3.0 * sigma);
        let mut shat = vec![0.0; d];
        shat[0] = r;
        // positive sign convention on the hard-case eigenvector
        return Ok(finish_hard(model, sigma, &vecs, shat, t));
    }

    // hard case: g has (numerically) no component on the lam_min eigenspace
    let in_bottom = |k: usize| (lam[k] - lam_min).abs() <= HARD_CASE_TOL * lam_min.abs().max(1.0);
    let hard_candidate = lam_min < 0.0
        && (0..d).all(|k| !in_bottom(k) || ghat[k].abs() <= HARD_CASE_TOL * g_norm);
    if hard_candidate {
        let interior_norm = {
            let mut acc = 0.0;
            for k in 0..d {
                if !in_bottom(k) {
                    let sk = ghat[k] / (lam[k] + t_lo);
                    acc += sk * sk;
                }
            }
            acc.sqrt()
        };
        let target = t_lo / (3.0 * sigma);
        if interior_norm <= target {
            // interior solution infeasible: pad with a bottom-eigenvector component
            let pad = (target * target - interior_norm * interior_norm).max(0.0).sqrt();
            let mut shat = vec![0.0; d];
            for k in 0..d {
                if !in_bottom(k) {
                    shat[k] = -ghat[k] / (lam[k] + t_lo);
                }
            }
            let bottom = (0..d).find(|&k| in_bottom(k)).unwrap_or(0);
            shat[bottom] += pad;
            return Ok(finish_hard(model, sigma, &vecs, shat, t_lo));
        }
    }

    // secular equation ||s(t)|| = t / (3 sigma) on (t_lo, t_hi]
    let mut lo = t_lo;
    let mut hi = t_lo + 3.0 * sigma * (g_norm / (3.0 * sigma).max(1e-300) + 1.0);
    // phi(t) = ||s(t)|| - t/(3 sigma): positive near t_lo, negative at hi
    let phi = |t: f64| norm_at(t) - t / (3.0 * sigma);
    debug_assert!(phi(hi) <= 0.0);
    let mut t = 0.5 * (lo + hi);
    for _ in 0..300 {
        let p = phi(t);
        if p.is_infinite() || p > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let resid = (t - 3.0 * sigma * norm_at(t)).abs();
        if resid <= SECULAR_TOL * t.max(1.0) && p.is_finite() {
            break;
        }
        t = 0.5 * (lo + hi);
    }
    t = hi; // the feasible side: H + tI is PSD and phi(hi) <= 0
    // polish with a few Newton steps on 1/||s(t)|| - 3 sigma / t (well conditioned)
    for _ in 0..40 {
        let n = norm_at(t);
        if !n.is_finite() || n == 0.0 {
            break;
        }
        // derivative of ||s(t)||^2 is -2 sum ghat^2/(lam+t)^3
        let mut dn2 = 0.0;
        for k in 0..d {
            let denom = lam[k] + t;
            if denom > 0.0 {
                dn2 += -2.0 * ghat[k] * ghat[k] / denom.powi(3);
            }
        }
        let dn = dn2 / (2.0 * n);
        let f = n - t / (3.0 * sigma);
        let df = dn - 1.0 / (3.0 * sigma);
        if df == 0.0 {
            break;
        }
        let tn = t - f / df;
        if !(tn > t_lo) || !tn.is_finite() {
            break;
        }
        if (tn - t).abs() <= 1e-16 * t.max(1.0) {
            t = tn;
            break;
        }
        t = tn;
    }
    if t <= t_lo {
        t = t_lo + 1e-300;
    }
    let shat = step_at(t);
    Ok(finish(shat, t))
}

fn finish_hard(
    model: &QuadraticModel,
    sigma: f64,
    vecs: &[f64],
    shat: Vec<f64>,
    t: f64,
) -> CubicSolveResult {
    let d = model.dim();
    let mut step: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|k| vecs[i * d + k] * shat[k]).sum())
        .collect();
    // positive sign convention: largest-magnitude entry of the step nonneg
    let lead = step
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    if step[lead] < 0.0 {
        // flipping the bottom-eigenvector component keeps optimality by symmetry
        let flipped: Vec<f64> = step.iter().map(|v| -v).collect();
        if model.eval_regularized(&flipped, sigma) <= model.eval_regularized(&step, sigma) {
            step = flipped;
        }
    }
    let value = model.eval_regularized(&step, sigma);
    let status = if vec_norm(&step) == 0.0 {
        CubicStatus::BaseIsMin
    } else {
        CubicStatus::Minimizer
    };
    CubicSolveResult {
        step,
        model_value: value,
        multiplier: t,
        status,
    }
}

/// Exhaustive evaluation of the regularized model over a uniform grid in the
/// infinity-ball of the given radius around the base. Test oracle; `d <= 3`.
/// Returns the best offset from the base and its regularized model value.
pub fn grid_oracle(
    model: &QuadraticModel,
    sigma: f64,
    radius: f64,
    resolution: usize,
) -> Result<(Vec<f64>, f64), CubicError> {
    let d = model.dim();
    if d > 3 {
        return Err(CubicError::GridDimension(d));
    }
    assert!(radius > 0.0 && resolution >= 2);
    let coord = |idx: usize| -radius + 2.0 * radius * idx as f64 / (resolution - 1) as f64;
    let mut best_s = vec![0.0; d];
    let mut best_v = model.eval_regularized(&best_s, sigma);
    let mut s = vec![0.0; d];
    let mut idx = vec![0usize; d];
    loop {
        for (k, &i) in idx.iter().enumerate() {
            s[k] = coord(i);
        }
        let v = model.eval_regularized(&s, sigma);
        if v < best_v {
            best_v = v;
            best_s = s.clone();
        }
        // odometer
        let mut carry = 0;
        loop {
            idx[carry] += 1;
            if idx[carry] < resolution {
                break;
            }
            idx[carry] = 0;
            carry += 1;
            if carry == d {
                return Ok((best_s, best_v));
            }
        }
    }
}

/// KKT residual `||(H + tI) s + g||` of a solve result.
pub fn kkt_residual(model: &QuadraticModel, result: &CubicSolveResult) -> f64 {
    let d = model.dim();
    let t = result.multiplier;
    let mut acc = 0.0;
    for i in 0..d {
        let mut r = model.g[i] + t * result.step[i];
        for j in 0..d {
            r += model.h[i * d + j] * result.step[j];
        }
        acc += r * r;
    }
    acc.sqrt()
}
