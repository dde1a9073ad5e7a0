//! Fast solver for `-Δ_h u = f` on the velocity grids.
//!
//! The velocity Laplacians separate by axis. Along an axis where the unknowns
//! sit on grid nodes between two Dirichlet nodes the eigenvectors are
//! `sin(kπi/N)` (DST-I); along an axis closed by reflected ghosts they are
//! `sin(kπ(j-½)/N)` (DST-II, inverted by DST-III). Both have eigenvalues
//! `(2 - 2cos(kπ/N))/h²`.

use std::sync::Arc;

use rustdct::{Dst1, DctPlanner, TransformType2And3};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridFamily, StaggeredGrid};
use crate::linalg::{DenseMatrix, Lu};

/// Compact storage of the unknowns of one family: `(nx, ny)` with the first
/// unknown index `(x0, y0)`, row-major with `i` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub nx: usize,
    pub ny: usize,
    pub x0: usize,
    pub y0: usize,
}

impl Layout {
    pub fn of(family: GridFamily, n: usize) -> Layout {
        let (x0, x1) = family.interior_range(Axis::X, n);
        let (y0, y1) = family.interior_range(Axis::Y, n);
        Layout {
            nx: x1 - x0 + 1,
            ny: y1 - y0 + 1,
            x0,
            y0,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> usize {
        (j - self.y0) * self.nx + (i - self.x0)
    }
}

fn velocity_check(family: GridFamily) -> Result<()> {
    match family {
        GridFamily::VEdge | GridFamily::HEdge => Ok(()),
        other => Err(Error::InvalidOperand(format!(
            "Poisson solves act on velocity families, got {}",
            other.name()
        ))),
    }
}

/// Applies `-Δ_h` with homogeneous closure to compact unknowns.
pub fn apply_neg_laplacian(grid: &StaggeredGrid, family: GridFamily, u: &[f64]) -> Result<Vec<f64>> {
    velocity_check(family)?;
    let n = grid.n();
    let lay = Layout::of(family, n);
    if u.len() != lay.len() {
        return Err(Error::InvalidOperand(format!(
            "expected {} unknowns, got {}",
            lay.len(),
            u.len()
        )));
    }
    // along a node axis the outside neighbours are zero; along a ghost axis
    // the outside neighbour mirrors the value with opposite sign
    let ghost_x = family.staggered(Axis::X);
    let ghost_y = family.staggered(Axis::Y);
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let (nx, ny) = (lay.nx, lay.ny);
    let mut out = vec![0.0; u.len()];
    for j in 0..ny {
        for i in 0..nx {
            let c = u[j * nx + i];
            let side = |inside: bool, idx: usize| {
                if inside {
                    u[idx]
                } else if ghost_x {
                    -c
                } else {
                    0.0
                }
            };
            let sidey = |inside: bool, idx: usize| {
                if inside {
                    u[idx]
                } else if ghost_y {
                    -c
                } else {
                    0.0
                }
            };
            let w = side(i > 0, (j * nx + i).wrapping_sub(1));
            let e = side(i + 1 < nx, j * nx + i + 1);
            let s = sidey(j > 0, (j * nx + i).wrapping_sub(nx));
            let nn = sidey(j + 1 < ny, (j + 1) * nx + i);
            out[j * nx + i] = (4.0 * c - w - e - s - nn) * inv_h2;
        }
    }
    Ok(out)
}

/// Sine-transform Poisson solver for one grid size.
pub struct PoissonSolver {
    n: usize,
    h: f64,
    dst1: Arc<dyn Dst1<f64>>,
    dst23: Arc<dyn TransformType2And3<f64>>,
    eig_node: Vec<f64>,
    eig_ghost: Vec<f64>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PoissonSolver").field("n", &self.n).field("h", &self.h).finish()
    }
}

fn eigenvalue(k: usize, n: usize, h: f64) -> f64 {
    (2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos()) / (h * h)
}

impl PoissonSolver {
    pub fn new(grid: &StaggeredGrid) -> PoissonSolver {
        let n = grid.n();
        let h = grid.h();
        let mut planner = DctPlanner::new();
        PoissonSolver {
            n,
            h,
            dst1: planner.plan_dst1(n - 1),
            dst23: planner.plan_dst2(n),
            eig_node: (1..n).map(|k| eigenvalue(k, n, h)).collect(),
            eig_ghost: (1..=n).map(|k| eigenvalue(k, n, h)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn along(&self, ghost: bool, forward: bool, buf: &mut [f64], scratch: &mut [f64]) {
        let n = self.n as f64;
        match (ghost, forward) {
            (false, _) => {
                // the FFT-backed DST-I reads two scratch slots it never
                // writes, so they must start at zero
                scratch.fill(0.0);
                self.dst1.process_dst1_with_scratch(buf, scratch);
                if !forward {
                    buf.iter_mut().for_each(|v| *v *= 2.0 / n);
                }
            }
            (true, true) => self.dst23.process_dst2_with_scratch(buf, scratch),
            (true, false) => {
                self.dst23.process_dst3_with_scratch(buf, scratch);
                buf.iter_mut().for_each(|v| *v *= 2.0 / n);
            }
        }
    }

    fn transform2d(&self, family: GridFamily, data: &mut [f64], forward: bool) {
        let lay = Layout::of(family, self.n);
        let (nx, ny) = (lay.nx, lay.ny);
        let gx = family.staggered(Axis::X);
        let gy = family.staggered(Axis::Y);
        let scratch_len = self
            .dst1
            .get_scratch_len()
            .max(self.dst23.get_scratch_len());
        let mut scratch = vec![0.0; scratch_len];
        for row in data.chunks_exact_mut(nx) {
            self.along(gx, forward, row, &mut scratch);
        }
        let mut col = vec![0.0; ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = data[j * nx + i];
            }
            self.along(gy, forward, &mut col, &mut scratch);
            for j in 0..ny {
                data[j * nx + i] = col[j];
            }
        }
    }

    /// Solves `-Δ_h u = rhs` on compact unknowns with homogeneous closure.
    pub fn solve(&self, family: GridFamily, rhs: &[f64]) -> Result<Vec<f64>> {
        velocity_check(family)?;
        let lay = Layout::of(family, self.n);
        if rhs.len() != lay.len() {
            return Err(Error::InvalidOperand(format!(
                "expected {} values, got {}",
                lay.len(),
                rhs.len()
            )));
        }
        let mut data = rhs.to_vec();
        self.transform2d(family, &mut data, true);
        let (ex, ey) = if family == GridFamily::VEdge {
            (&self.eig_node, &self.eig_ghost)
        } else {
            (&self.eig_ghost, &self.eig_node)
        };
        for j in 0..lay.ny {
            for i in 0..lay.nx {
                data[j * lay.nx + i] /= ex[i] + ey[j];
            }
        }
        self.transform2d(family, &mut data, false);
        Ok(data)
    }
}

/// Direct LU solver for the same operator, used as a reference on small grids.
#[derive(Debug)]
pub struct DensePoisson {
    family: GridFamily,
    lu: Lu,
}

impl DensePoisson {
    pub fn new(grid: &StaggeredGrid, family: GridFamily) -> Result<DensePoisson> {
        velocity_check(family)?;
        if grid.n() > 16 {
            return Err(Error::InvalidGrid(format!(
                "dense Poisson reference is limited to N <= 16, got {}",
                grid.n()
            )));
        }
        let lay = Layout::of(family, grid.n());
        let m = lay.len();
        let mut a = DenseMatrix::zeros(m);
        let mut e = vec![0.0; m];
        for c in 0..m {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            let col = apply_neg_laplacian(grid, family, &e)?;
            for (r, v) in col.iter().enumerate() {
                a.set(r, c, *v);
            }
        }
        Ok(DensePoisson {
            family,
            lu: Lu::factor(&a)?,
        })
    }

    pub fn family(&self) -> GridFamily {
        self.family
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.lu.solve(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rhs_gives_zero() {
        let g = StaggeredGrid::unit_square(8).unwrap();
        let s = PoissonSolver::new(&g);
        let lay = Layout::of(GridFamily::VEdge, 8);
        let u = s.solve(GridFamily::VEdge, &vec![0.0; lay.len()]).unwrap();
        assert!(u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [4, 8, 13, 32] {
            let g = StaggeredGrid::new(n, [-2.0, -2.0], [4.0, 4.0]).unwrap();
            let s = PoissonSolver::new(&g);
            for fam in [GridFamily::VEdge, GridFamily::HEdge] {
                let lay = Layout::of(fam, n);
                let u: Vec<f64> = (0..lay.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = apply_neg_laplacian(&g, fam, &u).unwrap();
                let back = s.solve(fam, &f).unwrap();
                let err = u.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-11, "n={n} {fam:?} err={err}");
            }
        }
    }

    #[test]
    fn dense_reference_agrees() {
        let g = StaggeredGrid::unit_square(8).unwrap();
        let s = PoissonSolver::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for fam in [GridFamily::VEdge, GridFamily::HEdge] {
            let d = DensePoisson::new(&g, fam).unwrap();
            let lay = Layout::of(fam, 8);
            let f: Vec<f64> = (0..lay.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = s.solve(fam, &f).unwrap();
            let b = d.solve(&f);
            let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= 1e-12 * scale);
            }
        }
        assert!(DensePoisson::new(&g, GridFamily::CellCenter).is_err());
    }
}
