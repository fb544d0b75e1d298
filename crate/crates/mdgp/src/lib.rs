//! Distance-geometry toolkit built around a block coordinate-descent solver
//! with adaptively regularized second-order model subproblems.
//!
//! The pieces, roughly bottom-up:
//!
//! * [`linalg`] — small dense symmetric eigensolver and 3x3 SVD.
//! * [`cubic`] — global minimization of a quadratic model plus a cubic
//!   regularization term on a low-dimensional block.
//! * [`solver`] — the block CD engine: adaptive-sigma step, schedules,
//!   stall detection, traces.
//! * [`mdgp`] — the molecular distance geometry stress objective, its block
//!   derivatives, the reflection restart, and the outer solve loop.
//! * [`embed`] — shortest-path completion plus classical MDS for the
//!   initial conformation.
//! * [`geometry`] — plane reflections and Procrustes alignment error.
//! * [`pdb`] — PDB ingestion and the plain-text instance format.
//! * [`spg`] — spectral projected gradient baseline.
//! * [`powell`] — the three-variable cycling example and its regularized
//!   counterpart.
//! * [`report`] — CSV run reports.
//!
//! See the `examples/` directory for runnable walkthroughs of each
//! capability; the thin `mdgp` binary wraps the same entry points.

pub mod cubic;
pub mod embed;
pub mod geometry;
pub mod linalg;
pub mod mdgp;
pub mod pdb;
pub mod powell;
pub mod report;
pub mod solver;
pub mod spg;

pub use cubic::{
    grid_oracle, kkt_residual, solve_cubic_reg_global, CubicSolveResult, CubicStatus,
    QuadraticModel,
};
pub use embed::{
    connectivity_check, double_center, fang_oleary_init, fang_oleary_init_with,
    shortest_path_completion, top_d_eigenpairs, CompletionAlgorithm, EmbedError, InitOptions,
};
pub use geometry::{plane_reflection, procrustes_error, AlignmentReport};
pub use mdgp::{
    block_grad_hess, cyclic_block_schedule, full_grad, outer_solve, partial_stress,
    reflect_improve, stress, Conformation, MdgpInstance, MdgpProblem, OuterReport,
    OuterTermination,
};
pub use pdb::{
    build_instance, parse_pdb, parse_pdb_file, read_instance, read_instance_file, write_instance,
    write_instance_file, AtomRecord, IngestOptions, PdbError,
};
pub use powell::{
    powell_cycle_trace, powell_exact_coordinate_min, powell_f, powell_k0_bound,
    powell_regularized_cd, powell_start, PowellCdReport, PowellState,
};
pub use report::{RunReport, CSV_HEADER};
pub use solver::{
    cd_solve, regularized_step, BlockOracle, BlockProblem, BlockSchedule, BoxBounds, SolverError,
    SolverParams, Termination, Trace,
};
pub use spg::{spg_solve, SpgParams, SpgReport, SpgTermination};

use std::path::{Path, PathBuf};

/// Resolve a data file: absolute paths and paths that already exist win;
/// otherwise the `MDGP_DATA_DIR` directory is searched.
pub fn resolve_data_path(name: &str) -> PathBuf {
    let direct = Path::new(name);
    if direct.is_absolute() || direct.exists() {
        return direct.to_path_buf();
    }
    if let Ok(dir) = std::env::var("MDGP_DATA_DIR") {
        let candidate = Path::new(&dir).join(name);
        if candidate.exists() {
            return candidate;
        }
    }
    direct.to_path_buf()
}
