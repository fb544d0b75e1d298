//! The molecular distance geometry objective and its block structure.
//!
//! The objective is the normalized quartic stress
//!
//!   f(x) = (1/|S|) sum_{(i,j) in S} (||x_i - x_j||^2 - d_ij^2)^2
//!
//! over ordered pairs S (so both (i,j) and (j,i) count; storage is unordered
//! with the factor 2 folded into the formulas). Blocks are per-atom: one
//! iteration moves a single atom, whose partial objective touches only its
//! neighbors in the distance graph.

use crate::cubic::{solve_cubic_reg_global, CubicStatus, QuadraticModel};
use crate::geometry::{plane_reflection, GeometryError};
use crate::solver::{
    cd_solve, BlockOracle, BlockProblem, BlockSchedule, BoxBounds, ModelSolve, SolverError,
    SolverParams, Termination, Trace,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MdgpError {
    #[error("self-pair ({0}, {0}) is not allowed")]
    SelfPair(usize),
    #[error("duplicate pair ({0}, {1})")]
    DuplicatePair(usize, usize),
    #[error("nonpositive distance {dist} for pair ({i}, {j})")]
    NonpositiveDistance { i: usize, j: usize, dist: f64 },
    #[error("atom index {index} out of range for {n_p} atoms")]
    AtomOutOfRange { index: usize, n_p: usize },
    #[error("conformation has {got} coordinates, expected {expected}")]
    BadConformation { got: usize, expected: usize },
    #[error("reflection restarts require d = 3, got d = {0}")]
    DimensionNot3(usize),
    #[error("instance needs at least {need} atoms, got {got}")]
    TooFewAtoms { need: usize, got: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Flat coordinate vector of all atom positions, atom-major: atom `j`
/// occupies slots `j*d .. j*d + d` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct Conformation {
    d: usize,
    coords: Vec<f64>,
}

impl Conformation {
    pub fn new(d: usize, coords: Vec<f64>) -> Result<Self, MdgpError> {
        if d == 0 || coords.len() % d != 0 {
            return Err(MdgpError::BadConformation {
                got: coords.len(),
                expected: d.max(1),
            });
        }
        Ok(Self { d, coords })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, MdgpError> {
        let d = points.first().map(|p| p.len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            coords.extend_from_slice(p);
        }
        Conformation::new(d, coords)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn atom_count(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn atom(&self, j: usize) -> &[f64] {
        &self.coords[j * self.d..(j + 1) * self.d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Sparse known-distance set over `n_p` points in `R^d`.
#[derive(Debug, Clone)]
pub struct MdgpInstance {
    d: usize,
    n_p: usize,
    /// Unordered storage: `i < j`, each pair once.
    pairs: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    ground_truth: Option<Conformation>,
    connected: bool,
}

impl MdgpInstance {
    pub fn new(
        d: usize,
        n_p: usize,
        mut pairs: Vec<(usize, usize, f64)>,
        ground_truth: Option<Conformation>,
    ) -> Result<Self, MdgpError> {
        if n_p < 2 {
            return Err(MdgpError::TooFewAtoms { need: 2, got: n_p });
        }
        for p in pairs.iter_mut() {
            if p.0 == p.1 {
                return Err(MdgpError::SelfPair(p.0));
            }
            if p.0 > p.1 {
                *p = (p.1, p.0, p.2);
            }
        }
        pairs.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(MdgpError::DuplicatePair(w[0].0, w[0].1));
            }
        }
        let mut adjacency = vec![Vec::new(); n_p];
        for &(i, j, dist) in &pairs {
            if j >= n_p {
                return Err(MdgpError::AtomOutOfRange { index: j, n_p });
            }
            if !(dist > 0.0) {
                return Err(MdgpError::NonpositiveDistance { i, j, dist });
            }
            adjacency[i].push((j, dist));
            adjacency[j].push((i, dist));
        }
        if let Some(ref gt) = ground_truth {
            if gt.dim() != d || gt.atom_count() != n_p {
                return Err(MdgpError::BadConformation {
                    got: gt.coords().len(),
                    expected: d * n_p,
                });
            }
        }
        let connected = components_of(n_p, &adjacency).len() == 1;
        Ok(Self {
            d,
            n_p,
            pairs,
            adjacency,
            ground_truth,
            connected,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn atom_count(&self) -> usize {
        self.n_p
    }

    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn neighbors(&self, atom: usize) -> &[(usize, f64)] {
        &self.adjacency[atom]
    }

    /// Ordered-pair count `|S|`; always even.
    pub fn s_ordered(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn ground_truth(&self) -> Option<&Conformation> {
        self.ground_truth.as_ref()
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Total number of variables `n = d * n_p`.
    pub fn n_vars(&self) -> usize {
        self.d * self.n_p
    }
}

pub(crate) fn components_of(n_p: usize, adjacency: &[Vec<(usize, f64)>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n_p];
    let mut components = Vec::new();
    for start in 0..n_p {
        if seen[start] {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut comp = Vec::new();
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &(w, _) in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Full stress `(1/|S|) sum over ordered pairs of (||x_i - x_j||^2 - d^2)^2`.
pub fn stress(instance: &MdgpInstance, x: &Conformation) -> f64 {
    debug_assert_eq!(x.coords().len(), instance.n_vars());
    let c = 2.0 / instance.s_ordered() as f64;
    let mut acc = 0.0;
    for &(i, j, dist) in &instance.pairs {
        let r = sq_dist(x.atom(i), x.atom(j)) - dist * dist;
        acc += r * r;
    }
    c * acc
}

/// Partial objective of one atom: `cached_constant` plus the atom's own
/// terms with its position replaced by `z`. `cached_constant` must equal the
/// stress contribution of all pairs not touching `atom` (computable once per
/// block iteration). Returns the value and the number of pairs touched.
pub fn partial_stress_counted(
    instance: &MdgpInstance,
    x: &Conformation,
    atom: usize,
    z: &[f64],
    cached_constant: f64,
) -> Result<(f64, usize), MdgpError> {
    if atom >= instance.n_p {
        return Err(MdgpError::AtomOutOfRange {
            index: atom,
            n_p: instance.n_p,
        });
    }
    let c = 2.0 / instance.s_ordered() as f64;
    let mut acc = 0.0;
    let neigh = &instance.adjacency[atom];
    for &(i, dist) in neigh {
        let r = sq_dist(x.atom(i), z) - dist * dist;
        acc += r * r;
    }
    Ok((cached_constant + c * acc, neigh.len()))
}

pub fn partial_stress(
    instance: &MdgpInstance,
    x: &Conformation,
    atom: usize,
    z: &[f64],
    cached_constant: f64,
) -> Result<f64, MdgpError> {
    partial_stress_counted(instance, x, atom, z, cached_constant).map(|(v, _)| v)
}

/// The stress contribution of the pairs touching `atom`, at the atom's
/// current position. `stress - own_stress` is the cached constant of
/// [`partial_stress`].
pub fn atom_own_stress(instance: &MdgpInstance, x: &Conformation, atom: usize) -> f64 {
    let c = 2.0 / instance.s_ordered() as f64;
    let z = x.atom(atom);
    let mut acc = 0.0;
    for &(i, dist) in &instance.adjacency[atom] {
        let r = sq_dist(x.atom(i), z) - dist * dist;
        acc += r * r;
    }
    c * acc
}

/// Analytic gradient and Hessian of the z-dependent part of the partial
/// objective, evaluated at `z`:
///   g = (8/|S|) sum (||x_i - z||^2 - d^2)(z - x_i)
///   H = (8/|S|) sum [(||x_i - z||^2 - d^2) I + 2 (z - x_i)(z - x_i)^T]
pub fn block_grad_hess(
    instance: &MdgpInstance,
    x: &Conformation,
    atom: usize,
    z: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), MdgpError> {
    if atom >= instance.n_p {
        return Err(MdgpError::AtomOutOfRange {
            index: atom,
            n_p: instance.n_p,
        });
    }
    let d = instance.d;
    let w = 8.0 / instance.s_ordered() as f64;
    let mut g = vec![0.0; d];
    let mut h = vec![0.0; d * d];
    for &(i, dist) in &instance.adjacency[atom] {
        let xi = x.atom(i);
        let r = sq_dist(xi, z) - dist * dist;
        for a in 0..d {
            let da = z[a] - xi[a];
            g[a] += w * r * da;
            h[a * d + a] += w * r;
            for b in 0..d {
                let db = z[b] - xi[b];
                h[a * d + b] += w * 2.0 * da * db;
            }
        }
    }
    Ok((g, h))
}

/// Full gradient of the stress with respect to every coordinate; the block
/// of atom `i` equals the block gradient at its current position.
pub fn full_grad(instance: &MdgpInstance, x: &Conformation) -> Vec<f64> {
    debug_assert_eq!(x.coords().len(), instance.n_vars());
    let d = instance.d;
    let w = 8.0 / instance.s_ordered() as f64;
    let mut g = vec![0.0; instance.n_vars()];
    for &(i, j, dist) in &instance.pairs {
        let xi = x.atom(i);
        let xj = x.atom(j);
        let r = sq_dist(xi, xj) - dist * dist;
        for a in 0..d {
            let diff = xi[a] - xj[a];
            g[i * d + a] += w * r * diff;
            g[j * d + a] -= w * r * diff;
        }
    }
    g
}

/// The per-atom cyclic schedule: iteration `k` frees the coordinates of atom
/// `mod(k, n_p)`.
pub fn cyclic_block_schedule(n_p: usize, d: usize) -> BlockSchedule {
    let blocks: Vec<Vec<usize>> = (0..n_p)
        .map(|atom| (atom * d..(atom + 1) * d).collect())
        .collect();
    BlockSchedule::new(blocks, n_p * d).expect("cyclic schedule covers all coordinates")
}

/// The MDGP objective wired into the generic CD engine.
pub struct MdgpProblem<'a> {
    instance: &'a MdgpInstance,
}

impl<'a> MdgpProblem<'a> {
    pub fn new(instance: &'a MdgpInstance) -> Self {
        Self { instance }
    }
}

struct MdgpBlockOracle<'a> {
    instance: &'a MdgpInstance,
    /// Neighbor positions, row per neighbor.
    neigh_pos: Vec<f64>,
    neigh_d2: Vec<f64>,
    base: Vec<f64>,
    cached_constant: f64,
    f_base: f64,
}

impl<'a> MdgpBlockOracle<'a> {
    fn block_part(&self, z: &[f64]) -> f64 {
        let d = self.instance.d;
        let c = 2.0 / self.instance.s_ordered() as f64;
        let mut acc = 0.0;
        for (row, &d2) in self.neigh_d2.iter().enumerate() {
            let xi = &self.neigh_pos[row * d..(row + 1) * d];
            let r = sq_dist(xi, z) - d2;
            acc += r * r;
        }
        c * acc
    }
}

impl<'a> BlockOracle for MdgpBlockOracle<'a> {
    fn dim(&self) -> usize {
        self.instance.d
    }

    fn base(&self) -> &[f64] {
        &self.base
    }

    fn f_base(&self) -> f64 {
        self.f_base
    }

    fn f_at(&mut self, z: &[f64]) -> f64 {
        self.cached_constant + self.block_part(z)
    }

    fn grad_at(&mut self, z: &[f64]) -> Vec<f64> {
        let d = self.instance.d;
        let w = 8.0 / self.instance.s_ordered() as f64;
        let mut g = vec![0.0; d];
        for (row, &d2) in self.neigh_d2.iter().enumerate() {
            let xi = &self.neigh_pos[row * d..(row + 1) * d];
            let r = sq_dist(xi, z) - d2;
            for a in 0..d {
                g[a] += w * r * (z[a] - xi[a]);
            }
        }
        g
    }

    fn solve_model(&mut self, sigma: f64, p: u32) -> Result<ModelSolve, SolverError> {
        if p != 2 {
            return Err(SolverError::UnsupportedOrder(p));
        }
        let d = self.instance.d;
        let w = 8.0 / self.instance.s_ordered() as f64;
        let mut g = vec![0.0; d];
        let mut h = vec![0.0; d * d];
        let z = &self.base;
        for (row, &d2) in self.neigh_d2.iter().enumerate() {
            let xi = &self.neigh_pos[row * d..(row + 1) * d];
            let r = sq_dist(xi, z) - d2;
            for a in 0..d {
                let da = z[a] - xi[a];
                g[a] += w * r * da;
                h[a * d + a] += w * r;
                for b in 0..d {
                    h[a * d + b] += w * 2.0 * da * (z[b] - xi[b]);
                }
            }
        }
        let model = QuadraticModel::new(self.f_base, g, h, self.base.clone())
            .map_err(|e| SolverError::ModelSolve(e.to_string()))?;
        let r = solve_cubic_reg_global(&model, sigma)
            .map_err(|e| SolverError::ModelSolve(e.to_string()))?;
        let point: Vec<f64> = self.base.iter().zip(&r.step).map(|(b, s)| b + s).collect();
        Ok(ModelSolve {
            point,
            model_value: r.model_value,
            unbounded: r.status == CubicStatus::Unbounded,
        })
    }
}

impl<'a> BlockProblem for MdgpProblem<'a> {
    fn dim(&self) -> usize {
        self.instance.n_vars()
    }

    fn bounds(&self) -> BoxBounds {
        BoxBounds::unbounded(self.dim())
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let conf = Conformation {
            d: self.instance.d,
            coords: x.to_vec(),
        };
        stress(self.instance, &conf)
    }

    fn oracle<'b>(
        &'b self,
        x: &[f64],
        block: &[usize],
        f_current: f64,
    ) -> Box<dyn BlockOracle + 'b> {
        let d = self.instance.d;
        debug_assert_eq!(block.len(), d);
        let atom = block[0] / d;
        debug_assert!(block.iter().enumerate().all(|(s, &i)| i == atom * d + s));
        let base = x[atom * d..(atom + 1) * d].to_vec();
        let neigh = &self.instance.adjacency[atom];
        let mut neigh_pos = Vec::with_capacity(neigh.len() * d);
        let mut neigh_d2 = Vec::with_capacity(neigh.len());
        for &(i, dist) in neigh {
            neigh_pos.extend_from_slice(&x[i * d..(i + 1) * d]);
            neigh_d2.push(dist * dist);
        }
        let mut oracle = MdgpBlockOracle {
            instance: self.instance,
            neigh_pos,
            neigh_d2,
            base: base.clone(),
            cached_constant: 0.0,
            f_base: f_current,
        };
        oracle.cached_constant = f_current - oracle.block_part(&base);
        Box::new(oracle)
    }
}

/// One pass of the reflection heuristic over all atoms. For each atom, the
/// reference value is the raw (unnormalized) sum of its own residuals; every
/// neighbor triplet defines a candidate mirror plane, and a reflection is
/// applied whenever it takes the sum strictly below the reference value. The
/// reference value is intentionally not refreshed after a reflection, so a
/// sequence of reflections may be applied non-monotonically.
pub fn reflect_improve(
    instance: &MdgpInstance,
    x: &mut Conformation,
    triplet_cap: usize,
) -> Result<bool, MdgpError> {
    if instance.d != 3 {
        return Err(MdgpError::DimensionNot3(instance.d));
    }
    let mut changed = false;
    for atom in 0..instance.n_p {
        // near neighbors first: candidate planes from the closest atoms
        let mut neigh: Vec<(usize, f64)> = instance.adjacency[atom].clone();
        neigh.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        if neigh.len() < 3 {
            continue;
        }
        let own_sum = |p: &[f64], x: &Conformation| -> f64 {
            let mut acc = 0.0;
            for &(i, dist) in &instance.adjacency[atom] {
                let r = sq_dist(x.atom(i), p) - dist * dist;
                acc += r * r;
            }
            acc
        };
        let reference = own_sum(x.atom(atom), x);
        let mut tried = 0usize;
        'triplets: for a in 0..neigh.len() {
            for b in (a + 1)..neigh.len() {
                for c in (b + 1)..neigh.len() {
                    if tried >= triplet_cap {
                        break 'triplets;
                    }
                    tried += 1;
                    let q1: [f64; 3] = x.atom(neigh[a].0).try_into().unwrap();
                    let q2: [f64; 3] = x.atom(neigh[b].0).try_into().unwrap();
                    let q3: [f64; 3] = x.atom(neigh[c].0).try_into().unwrap();
                    let p: [f64; 3] = x.atom(atom).try_into().unwrap();
                    let reflected = match plane_reflection(p, q1, q2, q3) {
                        Ok(r) => r,
                        Err(GeometryError::DegeneratePlane) => continue,
                    };
                    if own_sum(&reflected, x) < reference {
                        let slot = &mut x.coords_mut()[atom * 3..atom * 3 + 3];
                        slot.copy_from_slice(&reflected);
                        changed = true;
                    }
                }
            }
        }
    }
    Ok(changed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OuterTermination {
    /// `f <= f_target`: global minimizer up to the requested precision.
    GlobalUpToPrecision,
    /// A stall with no improving reflection: target not reached.
    ReflectionExhausted,
    IterationCap,
}

impl OuterTermination {
    pub fn as_str(&self) -> &'static str {
        match self {
            OuterTermination::GlobalUpToPrecision => "target_reached",
            OuterTermination::ReflectionExhausted => "reflection_exhausted",
            OuterTermination::IterationCap => "iteration_cap",
        }
    }
}

/// Counters and final state of a full reflection-restart solve.
#[derive(Debug, Clone)]
pub struct OuterReport {
    pub final_x: Conformation,
    pub final_f: f64,
    pub iterations: u64,
    pub evaluations: u64,
    pub cd_rounds: u64,
    pub reflection_rounds: u64,
    pub termination: OuterTermination,
    /// Traces of the individual CD rounds, in order.
    pub traces: Vec<Trace>,
}

/// Reflection-restart outer loop: run CD until target or stall; on stall,
/// try to improve the iterate by mirror reflections and re-enter CD; stop
/// when the target is met or no reflection applies.
pub fn outer_solve(
    instance: &MdgpInstance,
    params: &SolverParams,
    init: &Conformation,
    triplet_cap: usize,
) -> Result<OuterReport, MdgpError> {
    if init.coords().len() != instance.n_vars() {
        return Err(MdgpError::BadConformation {
            got: init.coords().len(),
            expected: instance.n_vars(),
        });
    }
    let problem = MdgpProblem::new(instance);
    let schedule = cyclic_block_schedule(instance.n_p, instance.d);
    let mut params = params.clone();
    if params.stall_window.is_none() {
        params.stall_window = Some(instance.n_p);
    }
    let mut x = init.clone();
    let mut report = OuterReport {
        final_x: x.clone(),
        final_f: stress(instance, &x),
        iterations: 0,
        evaluations: 0,
        cd_rounds: 0,
        reflection_rounds: 0,
        termination: OuterTermination::IterationCap,
        traces: Vec::new(),
    };
    loop {
        let budget = params.max_iter.saturating_sub(report.iterations);
        if budget == 0 {
            report.termination = OuterTermination::IterationCap;
            break;
        }
        let round_params = SolverParams {
            max_iter: budget,
            ..params.clone()
        };
        let trace = cd_solve(&problem, &schedule, &round_params, x.coords())?;
        report.cd_rounds += 1;
        report.iterations += trace.iterations;
        report.evaluations += trace.evaluations;
        x = Conformation::new(instance.d, trace.final_x.clone())?;
        // guard against incremental-evaluation drift before declaring success
        let f_true = stress(instance, &x);
        let termination = trace.termination;
        report.traces.push(trace);
        report.final_f = f_true;
        if f_true <= params.f_target {
            report.termination = OuterTermination::GlobalUpToPrecision;
            break;
        }
        match termination {
            Termination::IterationCap => {
                report.termination = OuterTermination::IterationCap;
                break;
            }
            Termination::TargetReached | Termination::Stalled => {
                report.reflection_rounds += 1;
                let changed = reflect_improve(instance, &mut x, triplet_cap)?;
                if !changed {
                    report.termination = OuterTermination::ReflectionExhausted;
                    break;
                }
            }
        }
    }
    report.final_x = x;
    Ok(report)
}
