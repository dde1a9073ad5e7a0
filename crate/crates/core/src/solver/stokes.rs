//! Augmented saddle-point system and its Schur-complement solve.
//!
//! With `L = -Δ_h`, `G = (δ⁺_x, δ⁺_y)` and `D = (δ⁻_x, δ⁻_y)` acting on the
//! homogeneous unknowns, the system
//!
//! ```text
//! L u + G p        = f
//! D u       - γ λ  = g
//!     -γᵀ p + α λ  = 0
//! ```
//!
//! reduces to `(A - P) p = b` with `A = -D L⁻¹ G`, `P = γγᵀ/α` and
//! `b = g - D L⁻¹ f`. Since `D = -Gᵀ`, `A = Gᵀ L⁻¹ G` is symmetric positive
//! semidefinite with the constants as its null space, and `P` acts only on the
//! constants. CG therefore runs on the definite operator `A + P`; negating the
//! constant component of its solution gives the solution of `(A - P) p = b`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::grid::{apply_ghost_closure, Field, GridFamily, StaggeredGrid};
use crate::par;

use super::poisson::{Layout, PoissonSolver};
use super::VectorFn;

/// Lifted right-hand side of the augmented system in compact storage.
pub struct AugmentedSystem {
    grid: StaggeredGrid,
    poisson: PoissonSolver,
    rhs1: Vec<f64>,
    rhs2: Vec<f64>,
    rhs_div: Vec<f64>,
    trace: Option<VectorFn>,
    /// `α = |Ω|`.
    pub alpha: f64,
    /// Entries of `γ` (all equal to the cell measure `h²`).
    pub gamma: f64,
    /// `h² Σ (boundary flux terms)`, the discrete analogue of `∮ u_b·n`.
    pub compatibility_defect: f64,
}

impl std::fmt::Debug for AugmentedSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AugmentedSystem")
            .field("n", &self.grid.n())
            .field("alpha", &self.alpha)
            .field("compatibility_defect", &self.compatibility_defect)
            .finish()
    }
}

fn compact(field: &Field) -> Vec<f64> {
    let lay = Layout::of(field.family(), field.n());
    let mut out = vec![0.0; lay.len()];
    for (i, j) in field.interior_indices() {
        out[lay.at(i, j)] = field.get(i, j);
    }
    out
}

fn expand(grid: &StaggeredGrid, family: GridFamily, v: &[f64]) -> Field {
    let lay = Layout::of(family, grid.n());
    Field::from_interior(grid, family, |i, j| v[lay.at(i, j)])
}

impl AugmentedSystem {
    /// Builds the system from the corrected right-hand side `(f1, f2, g)` and
    /// an optional boundary trace `u_b` (zero when absent).
    pub fn new(
        grid: &StaggeredGrid,
        f1: &Field,
        f2: &Field,
        g: &Field,
        trace: Option<VectorFn>,
    ) -> Result<AugmentedSystem> {
        let fams = (f1.family(), f2.family(), g.family());
        if fams != (GridFamily::VEdge, GridFamily::HEdge, GridFamily::CellCenter) {
            return Err(Error::InvalidOperand(
                "right-hand side must be (vedge, hedge, cell) fields".into(),
            ));
        }
        let n = grid.n();
        let h = grid.h();
        let mut rhs1 = compact(f1);
        let mut rhs2 = compact(f2);
        let mut rhs_div = compact(g);
        let mut defect = 0.0;
        if let Some(tr) = &trace {
            let l1 = Layout::of(GridFamily::VEdge, n);
            let l2 = Layout::of(GridFamily::HEdge, n);
            let lc = Layout::of(GridFamily::CellCenter, n);
            let inv_h2 = 1.0 / (h * h);
            let ub = |fam: GridFamily, i: usize, j: usize, c: usize| tr(fam.position(grid, i, j))[c];
            let v = GridFamily::Vertex;
            // momentum rows next to the boundary
            for j in 1..=n {
                rhs1[l1.at(1, j)] += ub(GridFamily::VEdge, 0, j, 0) * inv_h2;
                rhs1[l1.at(n - 1, j)] += ub(GridFamily::VEdge, n, j, 0) * inv_h2;
                rhs2[l2.at(j, 1)] += ub(GridFamily::HEdge, j, 0, 1) * inv_h2;
                rhs2[l2.at(j, n - 1)] += ub(GridFamily::HEdge, j, n, 1) * inv_h2;
            }
            for i in 1..n {
                rhs1[l1.at(i, 1)] += 2.0 * ub(v, i, 0, 0) * inv_h2;
                rhs1[l1.at(i, n)] += 2.0 * ub(v, i, n, 0) * inv_h2;
                rhs2[l2.at(1, i)] += 2.0 * ub(v, 0, i, 1) * inv_h2;
                rhs2[l2.at(n, i)] += 2.0 * ub(v, n, i, 1) * inv_h2;
            }
            // divergence rows next to the boundary
            for k in 1..=n {
                let west = ub(GridFamily::VEdge, 0, k, 0) / h;
                let east = ub(GridFamily::VEdge, n, k, 0) / h;
                let south = ub(GridFamily::HEdge, k, 0, 1) / h;
                let north = ub(GridFamily::HEdge, k, n, 1) / h;
                rhs_div[lc.at(1, k)] += west;
                rhs_div[lc.at(n, k)] -= east;
                rhs_div[lc.at(k, 1)] += south;
                rhs_div[lc.at(k, n)] -= north;
                defect += (east - west + north - south) * h * h;
            }
        }
        Ok(AugmentedSystem {
            grid: *grid,
            poisson: PoissonSolver::new(grid),
            rhs1,
            rhs2,
            rhs_div,
            trace,
            alpha: grid.area(),
            gamma: h * h,
            compatibility_defect: defect,
        })
    }

    pub fn grid(&self) -> &StaggeredGrid {
        &self.grid
    }

    /// `G p` on compact velocity unknowns.
    fn gradient(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n();
        let inv_h = 1.0 / self.grid.h();
        let l1 = Layout::of(GridFamily::VEdge, n);
        let l2 = Layout::of(GridFamily::HEdge, n);
        let lc = Layout::of(GridFamily::CellCenter, n);
        let mut g1 = vec![0.0; l1.len()];
        let mut g2 = vec![0.0; l2.len()];
        for j in 1..=n {
            for i in 1..n {
                g1[l1.at(i, j)] = (p[lc.at(i + 1, j)] - p[lc.at(i, j)]) * inv_h;
                g2[l2.at(j, i)] = (p[lc.at(j, i + 1)] - p[lc.at(j, i)]) * inv_h;
            }
        }
        (g1, g2)
    }

    /// `D u` with zero boundary velocities.
    fn divergence(&self, u1: &[f64], u2: &[f64]) -> Vec<f64> {
        let n = self.grid.n();
        let inv_h = 1.0 / self.grid.h();
        let l1 = Layout::of(GridFamily::VEdge, n);
        let l2 = Layout::of(GridFamily::HEdge, n);
        let lc = Layout::of(GridFamily::CellCenter, n);
        let v1 = |i: usize, j: usize| if i == 0 || i == n { 0.0 } else { u1[l1.at(i, j)] };
        let v2 = |i: usize, j: usize| if j == 0 || j == n { 0.0 } else { u2[l2.at(i, j)] };
        let mut d = vec![0.0; lc.len()];
        for j in 1..=n {
            for i in 1..=n {
                d[lc.at(i, j)] = (v1(i, j) - v1(i - 1, j) + v2(i, j) - v2(i, j - 1)) * inv_h;
            }
        }
        d
    }

    fn poisson_pair(&self, r1: &[f64], r2: &[f64], threads: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if threads > 1 {
            let (a, b) = std::thread::scope(|s| {
                let h1 = s.spawn(|| self.poisson.solve(GridFamily::VEdge, r1));
                let b = self.poisson.solve(GridFamily::HEdge, r2);
                (h1.join().expect("Poisson worker panicked"), b)
            });
            Ok((a?, b?))
        } else {
            Ok((
                self.poisson.solve(GridFamily::VEdge, r1)?,
                self.poisson.solve(GridFamily::HEdge, r2)?,
            ))
        }
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// `(A + P) p` on compact pressure storage.
    fn apply_spd(&self, p: &[f64], threads: usize) -> Result<Vec<f64>> {
        let (g1, g2) = self.gradient(p);
        let (w1, w2) = self.poisson_pair(&g1, &g2, threads)?;
        let d = self.divergence(&w1, &w2);
        // P p = γ (γᵀ p) / α = h² mean(p) in every cell
        let shift = self.gamma * self.gamma * p.iter().sum::<f64>() / self.alpha;
        Ok(d.iter().map(|v| -v + shift).collect())
    }
}

/// Applies the definite Schur operator `A + P` to a pressure field.
pub fn schur_apply(p: &Field, sys: &AugmentedSystem) -> Result<Field> {
    if p.family() != GridFamily::CellCenter || p.n() != sys.grid.n() {
        return Err(Error::InvalidOperand("schur_apply expects a cell field on the system grid".into()));
    }
    let v = sys.apply_spd(p.values(), 1)?;
    Field::from_storage(GridFamily::CellCenter, sys.grid.n(), v, true)
}

/// Discrete velocity, pressure and multiplier.
#[derive(Debug, Clone)]
pub struct StokesFields {
    /// `u1` on vertical edges, boundary entries and ghosts from the trace.
    pub u1: Field,
    pub u2: Field,
    pub p: Field,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub iterations: usize,
    /// Relative residual after each CG iteration.
    pub residual_history: Vec<f64>,
    pub tolerance: f64,
    /// `‖D u - γλ - g‖_M` of the final fields.
    pub divergence_residual: f64,
    /// Max-norm residual of the momentum equations.
    pub momentum_residual: f64,
    pub compatibility_defect: f64,
    pub poisson_solves: usize,
    pub seconds: f64,
}

/// Options of a Stokes solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOptions {
    /// Relative residual target; `None` means `max(1e-11, 1e-2 h⁴)`.
    pub tol: Option<f64>,
    /// Iteration cap; `None` means `10 N`.
    pub max_iter: Option<usize>,
    pub threads: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: None,
            max_iter: None,
            threads: par::thread_count(),
        }
    }
}

pub fn default_tolerance(h: f64) -> f64 {
    (1e-2 * h.powi(4)).max(1e-11)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves the augmented system: CG on the pressure Schur complement, then two
/// Poisson solves for the velocity.
pub fn solve_stokes(sys: &AugmentedSystem, opts: &CgOptions) -> Result<(StokesFields, SolverStats)> {
    let start = Instant::now();
    let grid = sys.grid;
    let n = grid.n();
    let threads = opts.threads.max(1);
    let tol = opts.tol.unwrap_or_else(|| default_tolerance(grid.h()));
    let max_iter = opts.max_iter.unwrap_or(10 * n);
    let mut poisson_solves = 0;

    // b = g - D L⁻¹ f
    let (w1, w2) = sys.poisson_pair(&sys.rhs1, &sys.rhs2, threads)?;
    poisson_solves += 2;
    let dw = sys.divergence(&w1, &w2);
    let b: Vec<f64> = sys.rhs_div.iter().zip(&dw).map(|(g, d)| g - d).collect();

    let bnorm = dot(&b, &b).sqrt();
    let mut p = vec![0.0; b.len()];
    let mut history = Vec::new();
    if bnorm > 0.0 {
        let mut r = b.clone();
        let mut d = r.clone();
        let mut rr = dot(&r, &r);
        let mut converged = false;
        for _ in 0..max_iter {
            let ad = sys.apply_spd(&d, threads)?;
            poisson_solves += 2;
            let dad = dot(&d, &ad);
            if !(dad > 0.0) {
                return Err(Error::Numerical(format!(
                    "Schur operator lost definiteness (dᵀAd = {dad:.3e})"
                )));
            }
            let a = rr / dad;
            for k in 0..p.len() {
                p[k] += a * d[k];
                r[k] -= a * ad[k];
            }
            let rr_new = dot(&r, &r);
            let rel = rr_new.sqrt() / bnorm;
            history.push(rel);
            if rel <= tol {
                converged = true;
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for k in 0..d.len() {
                d[k] = r[k] + beta * d[k];
            }
        }
        if !converged {
            return Err(Error::SolverFailure {
                iterations: history.len(),
                last: history.last().copied().unwrap_or(f64::NAN),
                history,
            });
        }
        // constant component of the indefinite system has the opposite sign
        let c = AugmentedSystem::mean(&p);
        p.iter_mut().for_each(|v| *v -= 2.0 * c);
    }

    // u = L⁻¹ (f - G p)
    let (g1, g2) = sys.gradient(&p);
    let r1: Vec<f64> = sys.rhs1.iter().zip(&g1).map(|(f, g)| f - g).collect();
    let r2: Vec<f64> = sys.rhs2.iter().zip(&g2).map(|(f, g)| f - g).collect();
    let (u1, u2) = sys.poisson_pair(&r1, &r2, threads)?;
    poisson_solves += 2;
    let lambda = AugmentedSystem::mean(&p);

    // residuals of the full system
    let h = grid.h();
    let du = sys.divergence(&u1, &u2);
    let div_res = du
        .iter()
        .zip(&sys.rhs_div)
        .map(|(d, g)| (d - sys.gamma * lambda - g).powi(2))
        .sum::<f64>()
        .sqrt()
        * h;
    let lu1 = super::poisson::apply_neg_laplacian(&grid, GridFamily::VEdge, &u1)?;
    let lu2 = super::poisson::apply_neg_laplacian(&grid, GridFamily::HEdge, &u2)?;
    let mom = lu1
        .iter()
        .zip(&g1)
        .zip(&sys.rhs1)
        .chain(lu2.iter().zip(&g2).zip(&sys.rhs2))
        .map(|((l, g), f)| (l + g - f).abs())
        .fold(0.0, f64::max);

    let close = |fam: GridFamily, v: &[f64], c: usize| -> Result<Field> {
        let f = expand(&grid, fam, v);
        match &sys.trace {
            Some(tr) => {
                let comp = move |x: [f64; 2]| tr(x)[c];
                apply_ghost_closure(&grid, f, Some(&comp))
            }
            None => apply_ghost_closure(&grid, f, None),
        }
    };
    let fields = StokesFields {
        u1: close(GridFamily::VEdge, &u1, 0)?,
        u2: close(GridFamily::HEdge, &u2, 1)?,
        p: Field::from_storage(GridFamily::CellCenter, n, p, true)?,
        lambda,
    };
    let stats = SolverStats {
        iterations: history.len(),
        residual_history: history,
        tolerance: tol,
        divergence_residual: div_res,
        momentum_residual: mom,
        compatibility_defect: sys.compatibility_defect,
        poisson_solves,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((fields, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, Space};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn empty_system(n: usize) -> AugmentedSystem {
        let g = StaggeredGrid::unit_square(n).unwrap();
        AugmentedSystem::new(
            &g,
            &Field::zeros(&g, GridFamily::VEdge),
            &Field::zeros(&g, GridFamily::HEdge),
            &Field::zeros(&g, GridFamily::CellCenter),
            None,
        )
        .unwrap()
    }

    #[test]
    fn homogeneous_problem_gives_zero() {
        let sys = empty_system(8);
        let (f, st) = solve_stokes(&sys, &CgOptions::default()).unwrap();
        assert_eq!(st.iterations, 0);
        assert!(f.u1.values().iter().all(|v| *v == 0.0));
        assert!(f.p.values().iter().all(|v| *v == 0.0));
        assert_eq!(f.lambda, 0.0);
    }

    #[test]
    fn schur_constant_and_symmetry() {
        let sys = empty_system(8);
        let g = *sys.grid();
        let c = Field::sample(&g, GridFamily::CellCenter, |_| 2.5);
        let sc = schur_apply(&c, &sys).unwrap();
        let expect = sys.gamma * sys.gamma * 2.5 * 64.0 / sys.alpha;
        assert!(sc.values().iter().all(|v| *v == expect));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut rand_p = || Field::from_interior(&g, GridFamily::CellCenter, |_, _| rng.gen_range(-1.0..1.0));
        let p = rand_p();
        let q = rand_p();
        let spq = inner_product(&g, Space::M, &schur_apply(&p, &sys).unwrap(), &q).unwrap();
        let psq = inner_product(&g, Space::M, &p, &schur_apply(&q, &sys).unwrap()).unwrap();
        assert!((spq - psq).abs() <= 1e-12 * spq.abs().max(psq.abs()));
        assert!(inner_product(&g, Space::M, &schur_apply(&p, &sys).unwrap(), &p).unwrap() > 0.0);
    }

    #[test]
    fn iteration_cap_reports_history() {
        let g = StaggeredGrid::unit_square(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g_rhs = Field::from_interior(&g, GridFamily::CellCenter, |_, _| rng.gen_range(-1.0..1.0));
        let sys = AugmentedSystem::new(
            &g,
            &Field::zeros(&g, GridFamily::VEdge),
            &Field::zeros(&g, GridFamily::HEdge),
            &g_rhs,
            None,
        )
        .unwrap();
        let opts = CgOptions {
            tol: Some(1e-14),
            max_iter: Some(2),
            threads: 1,
        };
        match solve_stokes(&sys, &opts) {
            Err(Error::SolverFailure { iterations, history, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 2);
            }
            other => panic!("expected solver failure, got {other:?}"),
        }
    }

    #[test]
    fn lambda_absorbs_incompatible_divergence() {
        let g = StaggeredGrid::unit_square(8).unwrap();
        let ones = Field::sample(&g, GridFamily::CellCenter, |_| 1.0);
        let sys = AugmentedSystem::new(
            &g,
            &Field::zeros(&g, GridFamily::VEdge),
            &Field::zeros(&g, GridFamily::HEdge),
            &ones,
            None,
        )
        .unwrap();
        let (f, st) = solve_stokes(&sys, &CgOptions::default()).unwrap();
        let mean = f.p.values().iter().sum::<f64>() / 64.0;
        assert!((f.lambda - mean).abs() < 1e-12);
        // sum of D u vanishes, so γλ = -1 in every cell
        assert!((f.lambda * sys.gamma + 1.0).abs() < 1e-9);
        assert!(st.divergence_residual < 1e-9);
    }
}
