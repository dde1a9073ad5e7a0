//! Stokes solver: fast Poisson solves, Schur-complement CG and the full
//! pipeline from a problem definition to discrete fields.

pub mod poisson;
pub mod stokes;

use std::sync::Arc;

use crate::corrections::{assemble_rhs, build_corrections, CorrectedRhs, CorrectionField};
use crate::error::Result;
use crate::geometry::{line_crossings, LineCrossing};
use crate::grid::StaggeredGrid;
use crate::jumps::{jump_table, JumpSet};
use crate::par;
use crate::problems::ProblemSpec;

pub use poisson::{apply_neg_laplacian, DensePoisson, Layout, PoissonSolver};
pub use stokes::{default_tolerance, schur_apply, solve_stokes, AugmentedSystem, CgOptions, SolverStats, StokesFields};

/// Vector-valued function of position, e.g. a boundary trace.
pub type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Options of [`solve_problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub cg: CgOptions,
    /// Apply interface corrections (disable for the plain MAC scheme).
    pub corrections: bool,
    /// Record per-entry provenance in the correction field.
    pub provenance: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cg: CgOptions::default(),
            corrections: true,
            provenance: false,
        }
    }
}

/// Discrete interface data of one grid.
#[derive(Debug, Clone)]
pub struct InterfaceDiscretization {
    pub crossings: Vec<LineCrossing>,
    pub jumps: Vec<JumpSet>,
}

/// Everything produced by one solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub grid: StaggeredGrid,
    pub fields: StokesFields,
    pub stats: SolverStats,
    pub corrections: CorrectionField,
    pub crossings: usize,
}

/// Crossings and jump sets of `problem` on `grid`.
pub fn discretize_interface(problem: &ProblemSpec, grid: &StaggeredGrid) -> Result<InterfaceDiscretization> {
    let crossings = line_crossings(grid, problem.curve.as_ref())?;
    let jumps = jump_table(problem.curve.as_ref(), problem.interface.as_ref(), &crossings)?;
    Ok(InterfaceDiscretization { crossings, jumps })
}

/// Corrected right-hand side of `problem` on `grid` (boundary terms excluded).
pub fn corrected_rhs(problem: &ProblemSpec, grid: &StaggeredGrid, opts: &SolveOptions) -> Result<(CorrectedRhs, usize)> {
    let (corrections, count) = if opts.corrections {
        let disc = discretize_interface(problem, grid)?;
        (
            build_corrections(grid, &disc.crossings, &disc.jumps, opts.provenance)?,
            disc.crossings.len(),
        )
    } else {
        (CorrectionField::new(false), 0)
    };
    let forcing = |p: [f64; 2]| problem.forcing_at(p);
    Ok((assemble_rhs(grid, &forcing, corrections)?, count))
}

/// Assembles and solves `problem` on an `n x n` grid.
pub fn solve_problem(problem: &ProblemSpec, n: usize, opts: &SolveOptions) -> Result<Solution> {
    let grid = problem.grid(n)?;
    let (rhs, crossings) = corrected_rhs(problem, &grid, opts)?;
    let sys = AugmentedSystem::new(&grid, &rhs.f1, &rhs.f2, &rhs.g, Some(problem.boundary.clone()))?;
    let (fields, stats) = solve_stokes(&sys, &opts.cg)?;
    Ok(Solution {
        grid,
        fields,
        stats,
        corrections: rhs.corrections,
        crossings,
    })
}

/// Thread count used when none is given explicitly.
pub fn default_threads() -> usize {
    par::thread_count()
}
