//! Modified MAC finite-difference scheme for the two-dimensional Stokes
//! interface problem
//!
//! ```text
//! -μ Δu + ∇p = f,   ∇·u = 0       in Ω⁺ ∪ Ω⁻
//! [[u]] = 0,  [[σ(u, p) n]] = ψ   on Γ
//! u = u_b                         on ∂Ω
//! ```
//!
//! on a uniform staggered grid. Stencils cut by the interface receive Taylor
//! jump corrections on the right-hand side, the saddle-point system is solved
//! by conjugate gradients on the pressure Schur complement with sine-transform
//! Poisson solves, and a harness runs grid-refinement studies.
//!
//! Module map:
//! - [`grid`]: staggered grid, grid functions, difference operators, norms
//! - [`geometry`]: interface curves, crossings, node classification
//! - [`jumps`]: interface jump systems
//! - [`corrections`]: correction terms and corrected right-hand side
//! - [`solver`]: fast Poisson solver, Schur complement, Stokes solve
//! - [`problems`]: manufactured problems, expression-based config problems
//! - [`harness`]: convergence studies, CSV/table output, field dumps

// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch,
// and index loops read closer to the stencil formulas than iterator chains
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod corrections;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod jumps;
pub mod linalg;
pub mod par;
pub mod problems;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{Circle, Ellipse, InterfaceCurve, Side};
pub use grid::{Axis, Field, GridFamily, StaggeredGrid};
pub use problems::ProblemSpec;
pub use solver::{SolveOptions, Solution, StokesFields};
