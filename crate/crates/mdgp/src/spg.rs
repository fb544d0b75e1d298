//! Spectral projected gradient baseline: Barzilai-Borwein steplength with a
//! nonmonotone Armijo line search over the feasible box.

use crate::solver::{project_box, projected_gradient, BoxBounds, SolverError};

#[derive(Debug, Clone)]
pub struct SpgParams {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Armijo sufficient-decrease constant.
    pub gamma: f64,
    /// Nonmonotone reference window length.
    pub memory: usize,
    /// Tolerance on the infinity norm of the projected gradient.
    pub eps_opt: f64,
    pub f_target: f64,
    pub max_iter: usize,
}

impl Default for SpgParams {
    fn default() -> Self {
        Self {
            lambda_min: 1e-30,
            lambda_max: 1e30,
            gamma: 1e-4,
            memory: 10,
            eps_opt: 1e-8,
            f_target: 1e-10,
            max_iter: 500_000,
        }
    }
}

impl SpgParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.lambda_min > 0.0 && self.lambda_max >= self.lambda_min)
            || !(self.gamma > 0.0 && self.gamma < 1.0)
            || self.memory == 0
            || !(self.eps_opt > 0.0)
            || !self.f_target.is_finite()
        {
            return Err(SolverError::InvalidParams("bad spg parameter"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpgTermination {
    TargetReached,
    FirstOrderStationary,
    IterationCap,
}

impl SpgTermination {
    pub fn as_str(&self) -> &'static str {
        match self {
            SpgTermination::TargetReached => "target_reached",
            SpgTermination::FirstOrderStationary => "first_order",
            SpgTermination::IterationCap => "iteration_cap",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpgReport {
    pub final_x: Vec<f64>,
    pub final_f: f64,
    pub grad_inf: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: SpgTermination,
    pub f_history: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimize `f` over the box with the SPG method. `grad` writes the gradient
/// into its output slice.
pub fn spg_solve<F, G>(
    mut f: F,
    mut grad: G,
    bounds: &BoxBounds,
    x0: &[f64],
    params: &SpgParams,
) -> Result<SpgReport, SolverError>
where
    F: FnMut(&[f64]) -> f64,
    G: FnMut(&[f64], &mut [f64]),
{
    params.validate()?;
    let n = bounds.dim();
    if x0.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: x0.len(),
        });
    }
    let mut x = project_box(x0, bounds)?;
    let mut fx = f(&x);
    let mut evals = 1usize;
    let mut g = vec![0.0; n];
    grad(&x, &mut g);
    let mut history = vec![fx];
    let mut lambda = {
        let gp = projected_gradient(&x, &g, bounds)?;
        let gn = inf_norm(&gp);
        if gn > 0.0 {
            (1.0 / gn).clamp(params.lambda_min, params.lambda_max)
        } else {
            1.0
        }
    };
    let mut termination = SpgTermination::IterationCap;
    let mut iterations = 0usize;
    for _ in 0..params.max_iter {
        let gp = projected_gradient(&x, &g, bounds)?;
        let gp_inf = inf_norm(&gp);
        if fx <= params.f_target {
            termination = SpgTermination::TargetReached;
            break;
        }
        if gp_inf <= params.eps_opt {
            termination = SpgTermination::FirstOrderStationary;
            break;
        }
        iterations += 1;
        // trial direction: projected BB step
        let raw: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - lambda * gi).collect();
        let trial = project_box(&raw, bounds)?;
        let d: Vec<f64> = trial.iter().zip(&x).map(|(t, xi)| t - xi).collect();
        let gtd: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let f_ref = history
            .iter()
            .rev()
            .take(params.memory)
            .fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        // backtracking with quadratic interpolation along x + t d
        let mut t = 1.0f64;
        let (f_new, x_new) = loop {
            // re-project: rounding of x + t d can overshoot a bound by one ulp
            let raw: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let cand = project_box(&raw, bounds)?;
            let fc = f(&cand);
            evals += 1;
            if fc <= f_ref + params.gamma * t * gtd {
                break (fc, cand);
            }
            // minimizer of the quadratic through (0, fx), slope gtd, (t, fc)
            let denom = 2.0 * (fc - fx - t * gtd);
            let t_q = if denom > 0.0 { -gtd * t * t / denom } else { t / 2.0 };
            t = t_q.clamp(0.1 * t, 0.9 * t);
            if t < 1e-16 {
                break (fc, cand);
            }
        };
        let mut g_new = vec![0.0; n];
        grad(&x_new, &mut g_new);
        // BB-1 steplength from the accepted move
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sts: f64 = s.iter().map(|v| v * v).sum();
        let sty: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        lambda = if sty > 0.0 {
            (sts / sty).clamp(params.lambda_min, params.lambda_max)
        } else {
            params.lambda_max
        };
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
    }
    let gp = projected_gradient(&x, &g, bounds)?;
    Ok(SpgReport {
        final_f: fx,
        grad_inf: inf_norm(&gp),
        final_x: x,
        iterations,
        evaluations: evals,
        termination,
        f_history: history,
    })
}
