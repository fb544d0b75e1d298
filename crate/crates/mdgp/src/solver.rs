//! Box-constrained block coordinate-descent engine.
//!
//! The outer loop picks a block of coordinates per iteration and calls the
//! adaptive-sigma regularized step on the restricted problem: solve the block
//! model plus `sigma ||step||^(p+1)`, accept when the true objective drops by
//! at least `alpha ||step||^(p+1)`, otherwise raise sigma geometrically.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("infeasible point: coordinate {index} = {value} outside [{lower}, {upper}]")]
    Infeasible {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("bounds require lower < upper componentwise; violated at index {0}")]
    InvalidBounds(usize),
    #[error("empty coordinate block")]
    EmptyBlock,
    #[error("block index {index} out of range for dimension {dim}")]
    BlockIndexOutOfRange { index: usize, dim: usize },
    #[error("block schedule leaves coordinate {0} uncovered within one cycle")]
    UncoveredCoordinate(usize),
    #[error(
        "regularization parameter overflow: sigma = {sigma:e} exceeded the stall \
         threshold without an acceptable step"
    )]
    SigmaOverflow { sigma: f64 },
    #[error("invalid solver parameter: {0}")]
    InvalidParams(&'static str),
    #[error("the built-in quadratic block model supports p = 2 only, got p = {0}")]
    UnsupportedOrder(u32),
    #[error("block model solve failed: {0}")]
    ModelSolve(String),
}

/// Componentwise bounds `lower <= x <= upper`; infinite entries mean
/// unconstrained on that side.
#[derive(Debug, Clone)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, SolverError> {
        if lower.len() != upper.len() {
            return Err(SolverError::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for i in 0..lower.len() {
            if !(lower[i] < upper[i]) {
                return Err(SolverError::InvalidBounds(i));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Fully unconstrained bounds of dimension `n`.
    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_unbounded(&self) -> bool {
        self.lower.iter().all(|v| v.is_infinite()) && self.upper.iter().all(|v| v.is_infinite())
    }

    pub fn contains(&self, x: &[f64]) -> Result<(), SolverError> {
        if x.len() != self.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for i in 0..x.len() {
            if x[i] < self.lower[i] || x[i] > self.upper[i] {
                return Err(SolverError::Infeasible {
                    index: i,
                    value: x[i],
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    /// Bounds restricted to the coordinates of a block.
    pub fn restrict(&self, block: &[usize]) -> Result<BoxBounds, SolverError> {
        if block.is_empty() {
            return Err(SolverError::EmptyBlock);
        }
        let mut lower = Vec::with_capacity(block.len());
        let mut upper = Vec::with_capacity(block.len());
        for &i in block {
            if i >= self.dim() {
                return Err(SolverError::BlockIndexOutOfRange {
                    index: i,
                    dim: self.dim(),
                });
            }
            lower.push(self.lower[i]);
            upper.push(self.upper[i]);
        }
        BoxBounds::new(lower, upper)
    }
}

/// Euclidean projection onto the box.
pub fn project_box(x: &[f64], bounds: &BoxBounds) -> Result<Vec<f64>, SolverError> {
    if x.len() != bounds.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: bounds.dim(),
            got: x.len(),
        });
    }
    Ok(x.iter()
        .enumerate()
        .map(|(i, &v)| v.clamp(bounds.lower[i], bounds.upper[i]))
        .collect())
}

/// Projected gradient `g_P(x) = P(x - g) - x`; zero iff `x` is first-order
/// stationary for the box.
pub fn projected_gradient(x: &[f64], g: &[f64], bounds: &BoxBounds) -> Result<Vec<f64>, SolverError> {
    bounds.contains(x)?;
    if g.len() != x.len() {
        return Err(SolverError::DimensionMismatch {
            expected: x.len(),
            got: g.len(),
        });
    }
    let moved: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    let proj = project_box(&moved, bounds)?;
    Ok(proj.iter().zip(x).map(|(p, a)| p - a).collect())
}

/// Block projected gradient `g_{P,I}`: entries outside the block are zero,
/// entries inside equal the corresponding entries of the projected gradient.
pub fn block_projected_gradient(
    x: &[f64],
    g: &[f64],
    bounds: &BoxBounds,
    block: &[usize],
) -> Result<Vec<f64>, SolverError> {
    if block.is_empty() {
        return Err(SolverError::EmptyBlock);
    }
    let full = projected_gradient(x, g, bounds)?;
    let mut out = vec![0.0; x.len()];
    for &i in block {
        if i >= x.len() {
            return Err(SolverError::BlockIndexOutOfRange {
                index: i,
                dim: x.len(),
            });
        }
        out[i] = full[i];
    }
    Ok(out)
}

/// Knobs of the regularized step and the block CD loop.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Model order; the built-in quadratic block model supports p = 2 only.
    pub p: u32,
    /// Sufficient-descent weight in `f(x+) <= f(x) - alpha ||step||^(p+1)`.
    pub alpha: f64,
    pub sigma_min: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// First-order tolerance of the inexact subproblem stop; unused when the
    /// subproblem is solved globally.
    pub theta: f64,
    pub f_target: f64,
    /// Sigma above this value counts as a stall symptom.
    pub sigma_max: f64,
    /// Insufficient-decrease threshold of the stall test.
    pub dec_tol: f64,
    /// Consecutive-iteration window of the stall test; `None` means the
    /// schedule cycle length.
    pub stall_window: Option<usize>,
    pub max_iter: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            p: 2,
            alpha: 1e-8,
            sigma_min: 1e-8,
            tau1: 100.0,
            tau2: 100.0,
            theta: 1e-3,
            f_target: 1e-10,
            sigma_max: 1e20,
            dec_tol: 1e-8,
            stall_window: None,
            max_iter: 500_000_000,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.p == 0 {
            return Err(SolverError::InvalidParams("p must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(SolverError::InvalidParams("alpha must be positive"));
        }
        if !(self.sigma_min > 0.0) {
            return Err(SolverError::InvalidParams("sigma_min must be positive"));
        }
        if !(self.tau1 > 1.0) || !(self.tau2 >= self.tau1) {
            return Err(SolverError::InvalidParams("need tau2 >= tau1 > 1"));
        }
        if !(self.theta > 0.0) {
            return Err(SolverError::InvalidParams("theta must be positive"));
        }
        Ok(())
    }
}

/// Deterministic map `k -> I_k` cycling over a fixed list of blocks.
/// Every coordinate must appear in some block of the cycle.
#[derive(Debug, Clone)]
pub struct BlockSchedule {
    blocks: Vec<Vec<usize>>,
    dim: usize,
}

impl BlockSchedule {
    pub fn new(blocks: Vec<Vec<usize>>, dim: usize) -> Result<Self, SolverError> {
        if blocks.is_empty() {
            return Err(SolverError::EmptyBlock);
        }
        let mut covered = vec![false; dim];
        for block in &blocks {
            if block.is_empty() {
                return Err(SolverError::EmptyBlock);
            }
            for &i in block {
                if i >= dim {
                    return Err(SolverError::BlockIndexOutOfRange { index: i, dim });
                }
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(SolverError::UncoveredCoordinate(i));
        }
        Ok(Self { blocks, dim })
    }

    /// One singleton block per coordinate, cycled in order.
    pub fn singletons(dim: usize) -> Self {
        Self {
            blocks: (0..dim).map(|i| vec![i]).collect(),
            dim,
        }
    }

    pub fn block(&self, k: u64) -> &[usize] {
        &self.blocks[(k % self.blocks.len() as u64) as usize]
    }

    /// Essentially-cyclic bound: every coordinate is visited within this
    /// many consecutive iterations.
    pub fn cycle_length(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Outcome of one block model solve at a given sigma.
#[derive(Debug, Clone)]
pub struct ModelSolve {
    /// Trial point in block coordinates (absolute, not an offset).
    pub point: Vec<f64>,
    pub model_value: f64,
    /// Set when the sigma = 0 model has no finite minimizer; the engine then
    /// raises sigma as if the trial had been rejected.
    pub unbounded: bool,
}

/// Restriction of the objective to one block, with the rest of the iterate
/// frozen. `f_at` must return the full objective value at the scattered point
/// (typically via an incremental formula).
pub trait BlockOracle {
    fn dim(&self) -> usize;
    /// Base point of the block (the current values of the free coordinates).
    fn base(&self) -> &[f64];
    /// Objective value at the base.
    fn f_base(&self) -> f64;
    /// Objective value with the block set to `z`.
    fn f_at(&mut self, z: &[f64]) -> f64;
    /// Gradient of the restricted objective at `z`.
    fn grad_at(&mut self, z: &[f64]) -> Vec<f64>;
    /// Global minimizer of the block model plus `sigma ||z - base||^(p+1)`.
    fn solve_model(&mut self, sigma: f64, p: u32) -> Result<ModelSolve, SolverError>;
}

/// Result of one adaptive-sigma regularized step.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub accepted_point: Vec<f64>,
    /// The sigma at which the step was accepted.
    pub sigma_final: f64,
    /// Number of model subproblem solves (one true-objective evaluation each).
    pub model_solves: u64,
    pub f_new: f64,
    /// Euclidean norm of the accepted block step.
    pub step_norm: f64,
}

fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One iteration of the adaptive-sigma step: start at sigma = 0, solve the
/// regularized block model globally, accept on sufficient descent of the true
/// objective, otherwise raise sigma by `max(sigma_min, tau1 * sigma)`.
pub fn regularized_step(
    oracle: &mut dyn BlockOracle,
    params: &SolverParams,
) -> Result<StepReport, SolverError> {
    params.validate()?;
    let f_base = oracle.f_base();
    let mut sigma = 0.0f64;
    let mut model_solves = 0u64;
    loop {
        let solve = oracle.solve_model(sigma, params.p)?;
        model_solves += 1;
        if !solve.unbounded {
            let trial = solve.point;
            let step_norm = euclid_dist(&trial, oracle.base());
            let f_trial = oracle.f_at(&trial);
            if f_trial <= f_base - params.alpha * step_norm.powi(params.p as i32 + 1) {
                return Ok(StepReport {
                    accepted_point: trial,
                    sigma_final: sigma,
                    model_solves,
                    f_new: f_trial,
                    step_norm,
                });
            }
        }
        sigma = params.sigma_min.max(params.tau1 * sigma);
        if sigma > params.sigma_max {
            return Err(SolverError::SigmaOverflow { sigma });
        }
    }
}

/// Block-structured objective consumed by [`cd_solve`].
pub trait BlockProblem {
    fn dim(&self) -> usize;
    fn bounds(&self) -> BoxBounds;
    fn eval(&self, x: &[f64]) -> f64;
    /// Build the restricted oracle for `block` at the current iterate.
    /// `f_current` is the already-known objective value at `x`.
    fn oracle<'a>(
        &'a self,
        x: &[f64],
        block: &[usize],
        f_current: f64,
    ) -> Box<dyn BlockOracle + 'a>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    TargetReached,
    Stalled,
    IterationCap,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::TargetReached => "target_reached",
            Termination::Stalled => "stalled",
            Termination::IterationCap => "iteration_cap",
        }
    }
}

/// Per-iteration history and counters of one CD run.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `f_history[0] = f(x0)`, then one entry per iteration.
    pub f_history: Vec<f64>,
    pub step_norms: Vec<f64>,
    /// `||g_{P,I_k}(x^{k+1})||` per iteration.
    pub block_grad_norms: Vec<f64>,
    pub sigma_finals: Vec<f64>,
    pub iterations: u64,
    /// Total block-objective evaluations (= model subproblem solves that
    /// produced a trial point).
    pub evaluations: u64,
    pub termination: Termination,
    pub final_x: Vec<f64>,
    pub final_f: f64,
}

/// True iff every entry of the window is a stall symptom: final sigma above
/// `sigma_max`, or decrease smaller than `dec_tol * min(1, |f_old|)`.
/// Entries are `(sigma_final, f_old, f_new)`.
pub fn stall_detector(window: &[(f64, f64, f64)], params: &SolverParams) -> bool {
    if window.is_empty() {
        return false;
    }
    window.iter().all(|&(sigma, f_old, f_new)| {
        sigma > params.sigma_max || !(f_new <= f_old - params.dec_tol * f_old.abs().min(1.0))
    })
}

/// The block CD loop: per iteration, freeze coordinates outside the scheduled
/// block, run the regularized step on the restriction, scatter the accepted
/// point back. Terminates on `f <= f_target`, on the stall heuristic, or at
/// the iteration cap.
pub fn cd_solve(
    problem: &dyn BlockProblem,
    schedule: &BlockSchedule,
    params: &SolverParams,
    x0: &[f64],
) -> Result<Trace, SolverError> {
    params.validate()?;
    let bounds = problem.bounds();
    bounds.contains(x0)?;
    if schedule.dim() != problem.dim() {
        return Err(SolverError::DimensionMismatch {
            expected: problem.dim(),
            got: schedule.dim(),
        });
    }
    let stall_window = params.stall_window.unwrap_or(schedule.cycle_length()).max(1);
    let mut x = x0.to_vec();
    let mut f = problem.eval(&x);
    let mut trace = Trace {
        f_history: vec![f],
        step_norms: Vec::new(),
        block_grad_norms: Vec::new(),
        sigma_finals: Vec::new(),
        iterations: 0,
        evaluations: 1,
        termination: Termination::IterationCap,
        final_x: x.clone(),
        final_f: f,
    };
    if f <= params.f_target {
        trace.termination = Termination::TargetReached;
        return Ok(trace);
    }
    let mut stall_run = 0usize;
    for k in 0..params.max_iter {
        let block = schedule.block(k);
        let f_old = f;
        let (sigma_final, step_norm) = {
            let mut oracle = problem.oracle(&x, block, f);
            match regularized_step(oracle.as_mut(), params) {
                Ok(step) => {
                    trace.evaluations += step.model_solves;
                    let block_bounds = bounds.restrict(block)?;
                    let grad = oracle.grad_at(&step.accepted_point);
                    let mut pg_sq = 0.0;
                    for (i, &gi) in grad.iter().enumerate() {
                        let xi = step.accepted_point[i];
                        let moved =
                            (xi - gi).clamp(block_bounds.lower()[i], block_bounds.upper()[i]);
                        pg_sq += (moved - xi) * (moved - xi);
                    }
                    drop(oracle);
                    for (slot, &i) in block.iter().enumerate() {
                        x[i] = step.accepted_point[slot];
                    }
                    f = step.f_new;
                    trace.block_grad_norms.push(pg_sq.sqrt());
                    (step.sigma_final, step.step_norm)
                }
                Err(SolverError::SigmaOverflow { sigma }) => {
                    // no acceptable step at this block; record the symptom and
                    // leave the iterate unchanged
                    trace.block_grad_norms.push(f64::NAN);
                    (sigma, 0.0)
                }
                Err(e) => return Err(e),
            }
        };
        trace.iterations += 1;
        trace.f_history.push(f);
        trace.step_norms.push(step_norm);
        trace.sigma_finals.push(sigma_final);
        let bad = sigma_final > params.sigma_max
            || !(f <= f_old - params.dec_tol * f_old.abs().min(1.0));
        stall_run = if bad { stall_run + 1 } else { 0 };
        if f <= params.f_target {
            trace.termination = Termination::TargetReached;
            break;
        }
        if stall_run >= stall_window {
            trace.termination = Termination::Stalled;
            break;
        }
    }
    trace.final_x = x;
    trace.final_f = f;
    Ok(trace)
}
