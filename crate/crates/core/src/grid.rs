//! Uniform staggered (MAC) grid, grid functions on its four point families,
//! difference operators and the discrete inner products and norms.
//!
//! All index arithmetic goes through [`GridFamily`]. Indices follow the
//! classical MAC labelling: along an axis where a family is staggered the
//! integer index `k` denotes the coordinate `(k - 1/2) h`, otherwise `k h`.
//!
//! | family       | x-index     | y-index     | location              |
//! |--------------|-------------|-------------|-----------------------|
//! | `Vertex`     | `0..=N`     | `0..=N`     | `(x_i, y_j)`          |
//! | `CellCenter` | `1..=N`     | `1..=N`     | `(x_{i-½}, y_{j-½})`  |
//! | `VEdge`      | `0..=N`     | `0..=N+1`   | `(x_i, y_{j-½})`      |
//! | `HEdge`      | `0..=N+1`   | `0..=N`     | `(x_{i-½}, y_j)`      |
//!
//! Rows `j = 0` and `j = N+1` of `VEdge` (columns `i = 0`, `i = N+1` of
//! `HEdge`) are the ghost points half a cell outside the boundary.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    pub fn other(self) -> Axis {
        match self {
            Axis::X => Axis::Y,
            Axis::Y => Axis::X,
        }
    }
}

/// Uniform `N x N` partition of a square domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaggeredGrid {
    n: usize,
    origin: [f64; 2],
    length: f64,
    h: f64,
}

impl StaggeredGrid {
    /// Builds the grid on `[x0, x0 + Lx] x [y0, y0 + Ly]`; the domain must be
    /// square so that cells are square.
    pub fn new(n: usize, origin: [f64; 2], extent: [f64; 2]) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidGrid(format!("need N >= 4, got {n}")));
        }
        let [lx, ly] = extent;
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got ({lx}, {ly})"
            )));
        }
        if (lx - ly).abs() > 1e-12 * lx.max(ly) {
            return Err(Error::InvalidGrid(format!(
                "domain must be square, got {lx} x {ly}"
            )));
        }
        if !origin[0].is_finite() || !origin[1].is_finite() {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        Ok(StaggeredGrid {
            n,
            origin,
            length: lx,
            h: lx / n as f64,
        })
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, [0.0, 0.0], [1.0, 1.0])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Coordinate of the half-index `half` (counted in steps of `h/2` from the origin).
    pub fn coord(&self, axis: Axis, half: i64) -> f64 {
        self.origin[axis.index()] + half as f64 * 0.5 * self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridFamily {
    /// Cell corners.
    Vertex,
    /// Cell centers (pressure).
    CellCenter,
    /// Vertical-edge midpoints (`u1`).
    VEdge,
    /// Horizontal-edge midpoints (`u2`).
    HEdge,
}

impl GridFamily {
    pub fn name(self) -> &'static str {
        match self {
            GridFamily::Vertex => "vertex",
            GridFamily::CellCenter => "cell",
            GridFamily::VEdge => "vedge",
            GridFamily::HEdge => "hedge",
        }
    }

    pub fn from_name(name: &str) -> Option<GridFamily> {
        match name {
            "vertex" => Some(GridFamily::Vertex),
            "cell" => Some(GridFamily::CellCenter),
            "vedge" => Some(GridFamily::VEdge),
            "hedge" => Some(GridFamily::HEdge),
            _ => None,
        }
    }

    /// Whether coordinates along `axis` sit at half-integer multiples of `h`.
    pub fn staggered(self, axis: Axis) -> bool {
        match (self, axis) {
            (GridFamily::Vertex, _) => false,
            (GridFamily::CellCenter, _) => true,
            (GridFamily::VEdge, Axis::X) => false,
            (GridFamily::VEdge, Axis::Y) => true,
            (GridFamily::HEdge, Axis::X) => true,
            (GridFamily::HEdge, Axis::Y) => false,
        }
    }

    /// Inclusive storage index range along `axis`, ghosts included.
    pub fn index_range(self, axis: Axis, n: usize) -> (usize, usize) {
        if !self.staggered(axis) {
            (0, n)
        } else if self == GridFamily::CellCenter {
            (1, n)
        } else {
            (0, n + 1)
        }
    }

    /// Inclusive index range of the unknowns of the discrete problem.
    pub fn interior_range(self, axis: Axis, n: usize) -> (usize, usize) {
        match self {
            GridFamily::VEdge | GridFamily::HEdge => {
                if self.staggered(axis) {
                    (1, n)
                } else {
                    (1, n - 1)
                }
            }
            _ => self.index_range(axis, n),
        }
    }

    /// Storage shape `(nx, ny)`.
    pub fn shape(self, n: usize) -> (usize, usize) {
        let (x0, x1) = self.index_range(Axis::X, n);
        let (y0, y1) = self.index_range(Axis::Y, n);
        (x1 - x0 + 1, y1 - y0 + 1)
    }

    /// Half-index (multiples of `h/2`) of integer index `k` along `axis`.
    pub fn half_index(self, axis: Axis, k: usize) -> i64 {
        if self.staggered(axis) {
            2 * k as i64 - 1
        } else {
            2 * k as i64
        }
    }

    /// Integer index of a half-index, if it belongs to this family's lattice.
    pub fn index_of_half(self, axis: Axis, half: i64) -> Option<i64> {
        let odd = half.rem_euclid(2) == 1;
        match (self.staggered(axis), odd) {
            (true, true) => Some((half + 1) / 2),
            (false, false) => Some(half / 2),
            _ => None,
        }
    }

    pub fn position(self, grid: &StaggeredGrid, i: usize, j: usize) -> [f64; 2] {
        [
            grid.coord(Axis::X, self.half_index(Axis::X, i)),
            grid.coord(Axis::Y, self.half_index(Axis::Y, j)),
        ]
    }

    /// The family reached by moving half a cell along `axis`.
    pub fn shifted(self, axis: Axis) -> GridFamily {
        use GridFamily::*;
        match (self, axis) {
            (Vertex, Axis::X) => HEdge,
            (Vertex, Axis::Y) => VEdge,
            (CellCenter, Axis::X) => VEdge,
            (CellCenter, Axis::Y) => HEdge,
            (VEdge, Axis::X) => CellCenter,
            (VEdge, Axis::Y) => Vertex,
            (HEdge, Axis::X) => Vertex,
            (HEdge, Axis::Y) => CellCenter,
        }
    }

    fn has_ghosts(self) -> bool {
        matches!(self, GridFamily::VEdge | GridFamily::HEdge)
    }
}

/// A grid function on one family, stored densely (row-major, `i` fastest)
/// including ghost rows/columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    family: GridFamily,
    n: usize,
    values: Vec<f64>,
    closed: bool,
}

impl Field {
    /// All-zero field; zero satisfies the homogeneous ghost closure.
    pub fn zeros(grid: &StaggeredGrid, family: GridFamily) -> Field {
        let (nx, ny) = family.shape(grid.n());
        Field {
            family,
            n: grid.n(),
            values: vec![0.0; nx * ny],
            closed: true,
        }
    }

    /// Samples `f` at every stored point, ghost positions included.
    pub fn sample(grid: &StaggeredGrid, family: GridFamily, f: impl Fn([f64; 2]) -> f64) -> Field {
        let mut field = Field::zeros(grid, family);
        let (x0, x1) = family.index_range(Axis::X, grid.n());
        let (y0, y1) = family.index_range(Axis::Y, grid.n());
        for j in y0..=y1 {
            for i in x0..=x1 {
                field.set(i, j, f(family.position(grid, i, j)));
            }
        }
        field
    }

    /// Field with values only at the unknowns; ghosts and boundary entries are
    /// left unpopulated until [`apply_ghost_closure`] is called.
    pub fn from_interior(
        grid: &StaggeredGrid,
        family: GridFamily,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Field {
        let mut field = Field::zeros(grid, family);
        let (x0, x1) = family.interior_range(Axis::X, grid.n());
        let (y0, y1) = family.interior_range(Axis::Y, grid.n());
        for j in y0..=y1 {
            for i in x0..=x1 {
                field.set(i, j, f(i, j));
            }
        }
        field.closed = !family.has_ghosts();
        field
    }

    /// Wraps raw storage (shape per [`GridFamily::shape`]); `closed` states
    /// whether ghost entries hold meaningful values.
    pub fn from_storage(family: GridFamily, n: usize, values: Vec<f64>, closed: bool) -> Result<Field> {
        let (nx, ny) = family.shape(n);
        if values.len() != nx * ny {
            return Err(Error::InvalidOperand(format!(
                "{} field for N={n} needs {} values, got {}",
                family.name(),
                nx * ny,
                values.len()
            )));
        }
        Ok(Field {
            family,
            n,
            values,
            closed: closed || !family.has_ghosts(),
        })
    }

    pub fn family(&self) -> GridFamily {
        self.family
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> (usize, usize) {
        self.family.shape(self.n)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Whether ghost entries are populated.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        let (x0, x1) = self.family.index_range(Axis::X, self.n);
        let (y0, y1) = self.family.index_range(Axis::Y, self.n);
        debug_assert!(
            (x0..=x1).contains(&i) && (y0..=y1).contains(&j),
            "index ({i}, {j}) out of range for {}",
            self.family.name()
        );
        (j - y0) * (x1 - x0 + 1) + (i - x0)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.offset(i, j);
        self.values[k] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.offset(i, j);
        self.values[k] += v;
    }

    fn contains(&self, i: i64, j: i64) -> bool {
        let (x0, x1) = self.family.index_range(Axis::X, self.n);
        let (y0, y1) = self.family.index_range(Axis::Y, self.n);
        i >= x0 as i64 && i <= x1 as i64 && j >= y0 as i64 && j <= y1 as i64
    }

    /// Iterates over the `(i, j)` indices of the unknowns.
    pub fn interior_indices(&self) -> impl Iterator<Item = (usize, usize)> {
        let (x0, x1) = self.family.interior_range(Axis::X, self.n);
        let (y0, y1) = self.family.interior_range(Axis::Y, self.n);
        (y0..=y1).flat_map(move |j| (x0..=x1).map(move |i| (i, j)))
    }

    pub fn max_abs_interior(&self) -> f64 {
        self.interior_indices()
            .map(|(i, j)| self.get(i, j).abs())
            .fold(0.0, f64::max)
    }
}

fn check_grid(grid: &StaggeredGrid, field: &Field) -> Result<()> {
    if field.n != grid.n() {
        return Err(Error::InvalidOperand(format!(
            "field built for N={} used on grid with N={}",
            field.n,
            grid.n()
        )));
    }
    Ok(())
}

/// Divided difference across neighbouring points along `axis`, stored at the
/// midpoints (the half-shifted family). In staggered storage the forward
/// difference at `l` and the backward difference at `l + 1` are the same
/// midpoint value, so both operators share this kernel.
fn difference(grid: &StaggeredGrid, field: &Field, axis: Axis) -> Result<Field> {
    check_grid(grid, field)?;
    let src = field.family;
    let dst = src.shifted(axis);
    let n = grid.n();
    let inv_h = 1.0 / grid.h();
    let mut out = Field::zeros(grid, dst);
    let (x0, x1) = dst.index_range(Axis::X, n);
    let (y0, y1) = dst.index_range(Axis::Y, n);
    for j in y0..=y1 {
        for i in x0..=x1 {
            let half = [dst.half_index(Axis::X, i), dst.half_index(Axis::Y, j)];
            let mut lo = half;
            let mut hi = half;
            lo[axis.index()] -= 1;
            hi[axis.index()] += 1;
            let idx = |h: [i64; 2]| -> Option<(i64, i64)> {
                Some((
                    src.index_of_half(Axis::X, h[0])?,
                    src.index_of_half(Axis::Y, h[1])?,
                ))
            };
            let (Some(a), Some(b)) = (idx(lo), idx(hi)) else {
                continue;
            };
            if field.contains(a.0, a.1) && field.contains(b.0, b.1) {
                let v = (field.get(b.0 as usize, b.1 as usize) - field.get(a.0 as usize, a.1 as usize))
                    * inv_h;
                out.set(i, j, v);
            }
        }
    }
    out.closed = !dst.has_ghosts();
    Ok(out)
}

/// `δ⁺` along `axis`: `h⁻¹ (v_{l+1} - v_l)`, stored at the midpoint between
/// `l` and `l+1` on the half-shifted family. Points whose stencil leaves the
/// stored range are zero.
pub fn diff_forward(grid: &StaggeredGrid, field: &Field, axis: Axis) -> Result<Field> {
    difference(grid, field, axis)
}

/// `δ⁻` along `axis`: `h⁻¹ (v_l - v_{l-1})`, stored at the midpoint between
/// `l-1` and `l`.
pub fn diff_backward(grid: &StaggeredGrid, field: &Field, axis: Axis) -> Result<Field> {
    difference(grid, field, axis)
}

/// Five-point Laplacian at the unknowns of a velocity family.
pub fn laplacian(grid: &StaggeredGrid, field: &Field) -> Result<Field> {
    check_grid(grid, field)?;
    if !field.family.has_ghosts() {
        return Err(Error::InvalidOperand(format!(
            "laplacian is defined on velocity families, got {}",
            field.family.name()
        )));
    }
    if !field.closed {
        return Err(Error::Precondition(
            "ghost entries must be populated before applying the laplacian".into(),
        ));
    }
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let mut out = Field::zeros(grid, field.family);
    for (i, j) in field.interior_indices() {
        let c = field.get(i, j);
        let v = field.get(i + 1, j) + field.get(i - 1, j) + field.get(i, j + 1) + field.get(i, j - 1)
            - 4.0 * c;
        out.set(i, j, v * inv_h2);
    }
    out.closed = false;
    Ok(out)
}

/// Sets the boundary entries of a velocity field from a boundary trace.
///
/// Entries lying on the boundary (u1 at `i = 0, N`; u2 at `j = 0, N`) take the
/// trace value; ghosts half a cell outside are set so that the average of the
/// ghost and the first interior value equals the trace at the edge midpoint,
/// i.e. `ghost = 2 g - interior`. Without a trace the closure is homogeneous.
pub fn apply_ghost_closure(
    grid: &StaggeredGrid,
    mut field: Field,
    trace: Option<&dyn Fn([f64; 2]) -> f64>,
) -> Result<Field> {
    check_grid(grid, &field)?;
    let n = grid.n();
    let g = |p: [f64; 2]| trace.map_or(0.0, |t| t(p));
    match field.family {
        GridFamily::VEdge => {
            let fam = GridFamily::VEdge;
            for j in 1..=n {
                field.set(0, j, g(fam.position(grid, 0, j)));
                field.set(n, j, g(fam.position(grid, n, j)));
            }
            for i in 0..=n {
                let south = g(GridFamily::Vertex.position(grid, i, 0));
                let north = g(GridFamily::Vertex.position(grid, i, n));
                let a = field.get(i, 1);
                let b = field.get(i, n);
                field.set(i, 0, 2.0 * south - a);
                field.set(i, n + 1, 2.0 * north - b);
            }
        }
        GridFamily::HEdge => {
            let fam = GridFamily::HEdge;
            for i in 1..=n {
                field.set(i, 0, g(fam.position(grid, i, 0)));
                field.set(i, n, g(fam.position(grid, i, n)));
            }
            for j in 0..=n {
                let west = g(GridFamily::Vertex.position(grid, 0, j));
                let east = g(GridFamily::Vertex.position(grid, n, j));
                let a = field.get(1, j);
                let b = field.get(n, j);
                field.set(0, j, 2.0 * west - a);
                field.set(n + 1, j, 2.0 * east - b);
            }
        }
        other => {
            return Err(Error::InvalidOperand(format!(
                "ghost closure applies to velocity families, got {}",
                other.name()
            )))
        }
    }
    field.closed = true;
    Ok(field)
}

/// The discrete spaces carrying an inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    V1,
    V2,
    W1,
    W2,
    M,
}

impl Space {
    pub fn family(self) -> GridFamily {
        match self {
            Space::V1 => GridFamily::VEdge,
            Space::V2 => GridFamily::HEdge,
            Space::W1 | Space::W2 => GridFamily::Vertex,
            Space::M => GridFamily::CellCenter,
        }
    }
}

fn rho(k: usize, n: usize) -> f64 {
    if k == 0 || k == n {
        0.5
    } else {
        1.0
    }
}

/// Weighted, `h²`-scaled ℓ² inner product on `space`.
pub fn inner_product(grid: &StaggeredGrid, space: Space, a: &Field, b: &Field) -> Result<f64> {
    check_grid(grid, a)?;
    check_grid(grid, b)?;
    let fam = space.family();
    if a.family != fam || b.family != fam {
        return Err(Error::InvalidOperand(format!(
            "{space:?} inner product needs {} fields, got {} and {}",
            fam.name(),
            a.family.name(),
            b.family.name()
        )));
    }
    let n = grid.n();
    let mut sum = 0.0;
    match space {
        Space::V1 | Space::V2 | Space::M => {
            for (i, j) in a.interior_indices() {
                sum += a.get(i, j) * b.get(i, j);
            }
        }
        Space::W1 => {
            for j in 0..=n {
                let w = rho(j, n);
                for i in 1..n {
                    sum += w * a.get(i, j) * b.get(i, j);
                }
            }
        }
        Space::W2 => {
            for j in 1..n {
                for i in 0..=n {
                    sum += rho(i, n) * a.get(i, j) * b.get(i, j);
                }
            }
        }
    }
    Ok(grid.h() * grid.h() * sum)
}

pub fn norm(grid: &StaggeredGrid, space: Space, a: &Field) -> Result<f64> {
    Ok(inner_product(grid, space, a, a)?.sqrt())
}

/// Unscaled norms of a velocity/pressure error triple.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorNorms {
    /// `‖e_u‖ = (‖e1‖²_{V1} + ‖e2‖²_{V2})^{1/2}`
    pub l2_u: f64,
    /// `‖e_p‖_{M}`
    pub l2_p: f64,
    /// discrete `H¹` seminorm `|e_u|_1`
    pub h1_semi_u: f64,
    /// max over the velocity unknowns
    pub max_u: f64,
    /// max over the four first-difference fields
    pub max_grad_u: f64,
}

/// The four backward differences `δ⁻_x v1 (M), δ⁻_y v1 (W1), δ⁻_x v2 (W2), δ⁻_y v2 (M)`.
pub fn velocity_gradients(grid: &StaggeredGrid, v1: &Field, v2: &Field) -> Result<[Field; 4]> {
    let close = |f: &Field| -> Result<Field> {
        if f.closed {
            Ok(f.clone())
        } else {
            apply_ghost_closure(grid, f.clone(), None)
        }
    };
    let v1 = close(v1)?;
    let v2 = close(v2)?;
    Ok([
        diff_backward(grid, &v1, Axis::X)?,
        diff_backward(grid, &v1, Axis::Y)?,
        diff_backward(grid, &v2, Axis::X)?,
        diff_backward(grid, &v2, Axis::Y)?,
    ])
}

/// Computes [`ErrorNorms`] for `e1 ∈ V1`, `e2 ∈ V2`, `ep ∈ M`. Velocity fields
/// whose ghosts are unpopulated are closed homogeneously first.
pub fn norms(grid: &StaggeredGrid, e1: &Field, e2: &Field, ep: &Field) -> Result<ErrorNorms> {
    if e1.family != GridFamily::VEdge || e2.family != GridFamily::HEdge || ep.family != GridFamily::CellCenter
    {
        return Err(Error::InvalidOperand(
            "norms expects (vedge, hedge, cell) fields".into(),
        ));
    }
    let n = grid.n();
    let l2_u = (inner_product(grid, Space::V1, e1, e1)? + inner_product(grid, Space::V2, e2, e2)?).sqrt();
    let l2_p = norm(grid, Space::M, ep)?;
    let [d1x, d1y, d2x, d2y] = velocity_gradients(grid, e1, e2)?;
    let h1 = inner_product(grid, Space::M, &d1x, &d1x)?
        + inner_product(grid, Space::W1, &d1y, &d1y)?
        + inner_product(grid, Space::W2, &d2x, &d2x)?
        + inner_product(grid, Space::M, &d2y, &d2y)?;
    let max_u = e1.max_abs_interior().max(e2.max_abs_interior());
    let mut max_grad = d1x.max_abs_interior().max(d2y.max_abs_interior());
    for j in 0..=n {
        for i in 1..n {
            max_grad = max_grad.max(d1y.get(i, j).abs()).max(d2x.get(j, i).abs());
        }
    }
    Ok(ErrorNorms {
        l2_u,
        l2_p,
        h1_semi_u: h1.sqrt(),
        max_u,
        max_grad_u: max_grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_interior(grid: &StaggeredGrid, fam: GridFamily, rng: &mut ChaCha8Rng) -> Field {
        Field::from_interior(grid, fam, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(StaggeredGrid::unit_square(3).is_err());
        assert!(StaggeredGrid::new(8, [0.0, 0.0], [1.0, 2.0]).is_err());
        assert!(StaggeredGrid::new(8, [0.0, 0.0], [0.0, 0.0]).is_err());
        let g = StaggeredGrid::new(16, [-2.0, -2.0], [4.0, 4.0]).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.area(), 16.0);
    }

    #[test]
    fn family_shapes_and_positions() {
        let g = StaggeredGrid::unit_square(4).unwrap();
        assert_eq!(GridFamily::VEdge.shape(4), (5, 6));
        assert_eq!(GridFamily::HEdge.shape(4), (6, 5));
        assert_eq!(GridFamily::CellCenter.shape(4), (4, 4));
        assert_eq!(GridFamily::Vertex.shape(4), (5, 5));
        assert_eq!(GridFamily::VEdge.position(&g, 1, 0), [0.25, -0.125]);
        assert_eq!(GridFamily::HEdge.position(&g, 5, 2), [1.125, 0.5]);
        assert_eq!(GridFamily::CellCenter.position(&g, 1, 4), [0.125, 0.875]);
    }

    #[test]
    fn differences_of_constants_and_linears() {
        let g = StaggeredGrid::new(8, [-1.0, 0.5], [2.0, 2.0]).unwrap();
        for fam in [GridFamily::Vertex, GridFamily::CellCenter, GridFamily::VEdge, GridFamily::HEdge] {
            let c = Field::sample(&g, fam, |_| 3.5);
            for axis in [Axis::X, Axis::Y] {
                let d = diff_forward(&g, &c, axis).unwrap();
                assert!(d.values().iter().all(|v| *v == 0.0));
            }
            let lin = Field::sample(&g, fam, |p| p[0]);
            let d = diff_forward(&g, &lin, Axis::X).unwrap();
            for (i, j) in d.interior_indices() {
                // points without a full stencil are left at zero
                if d.get(i, j) != 0.0 {
                    assert!((d.get(i, j) - 1.0).abs() < 1e-12);
                }
            }
            let lin_y = Field::sample(&g, fam, |p| 2.0 * p[1]);
            let d = diff_backward(&g, &lin_y, Axis::Y).unwrap();
            for v in d.values() {
                assert!(*v == 0.0 || (v - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_difference_of_cell_index() {
        let g = StaggeredGrid::unit_square(4).unwrap();
        let p = Field::from_interior(&g, GridFamily::CellCenter, |i, _| i as f64);
        let d = diff_forward(&g, &p, Axis::X).unwrap();
        assert_eq!(d.family(), GridFamily::VEdge);
        for (i, j) in d.interior_indices() {
            assert_eq!(d.get(i, j), 4.0);
        }
        assert_eq!(d.get(0, 2), 0.0);
        assert_eq!(d.get(4, 2), 0.0);
    }

    #[test]
    fn laplacian_exact_on_quadratics() {
        let g = StaggeredGrid::new(8, [-2.0, -2.0], [4.0, 4.0]).unwrap();
        for fam in [GridFamily::VEdge, GridFamily::HEdge] {
            let q = Field::sample(&g, fam, |p| p[0] * p[0] + p[1] * p[1]);
            let l = laplacian(&g, &q).unwrap();
            for (i, j) in l.interior_indices() {
                assert!((l.get(i, j) - 4.0).abs() < 1e-12);
            }
            let c = Field::sample(&g, fam, |_| -1.25);
            let l = laplacian(&g, &c).unwrap();
            assert!(l.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn laplacian_requires_ghosts_and_velocity_family() {
        let g = StaggeredGrid::unit_square(4).unwrap();
        let f = Field::from_interior(&g, GridFamily::VEdge, |_, _| 1.0);
        assert!(matches!(laplacian(&g, &f), Err(Error::Precondition(_))));
        let p = Field::zeros(&g, GridFamily::CellCenter);
        assert!(matches!(laplacian(&g, &p), Err(Error::InvalidOperand(_))));
        let closed = apply_ghost_closure(&g, f, None).unwrap();
        assert!(laplacian(&g, &closed).is_ok());
    }

    #[test]
    fn ghost_closure_values() {
        let g = StaggeredGrid::unit_square(4).unwrap();
        let f = Field::from_interior(&g, GridFamily::VEdge, |_, _| 3.0);
        let f = apply_ghost_closure(&g, f, None).unwrap();
        for i in 0..=4 {
            if i != 0 && i != 4 {
                assert_eq!(f.get(i, 0), -3.0);
                assert_eq!(f.get(i, 5), -3.0);
            }
        }
        assert_eq!(f.get(0, 2), 0.0);

        let trace = |_: [f64; 2]| 0.7;
        let f = Field::from_interior(&g, GridFamily::HEdge, |_, _| 0.2);
        let f = apply_ghost_closure(&g, f, Some(&trace)).unwrap();
        assert!((f.get(0, 2) - (2.0 * 0.7 - 0.2)).abs() < 1e-15);
        assert!((f.get(5, 1) - (2.0 * 0.7 - 0.2)).abs() < 1e-15);
        assert_eq!(f.get(2, 0), 0.7);
        assert_eq!(f.get(2, 4), 0.7);

        let p = Field::zeros(&g, GridFamily::CellCenter);
        assert!(apply_ghost_closure(&g, p, None).is_err());
    }

    #[test]
    fn inner_product_values() {
        let g = StaggeredGrid::unit_square(4).unwrap();
        let ones = Field::sample(&g, GridFamily::CellCenter, |_| 1.0);
        assert!((inner_product(&g, Space::M, &ones, &ones).unwrap() - 1.0).abs() < 1e-15);
        let w = Field::sample(&g, GridFamily::Vertex, |_| 1.0);
        assert!((inner_product(&g, Space::W1, &w, &w).unwrap() - 0.75).abs() < 1e-15);
        assert!((inner_product(&g, Space::W2, &w, &w).unwrap() - 0.75).abs() < 1e-15);
        assert!(inner_product(&g, Space::V1, &w, &w).is_err());
    }

    #[test]
    fn inner_product_symmetry() {
        let g = StaggeredGrid::unit_square(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for space in [Space::V1, Space::V2, Space::W1, Space::W2, Space::M] {
            let a = random_interior(&g, space.family(), &mut rng);
            let b = random_interior(&g, space.family(), &mut rng);
            let ab = inner_product(&g, space, &a, &b).unwrap();
            let ba = inner_product(&g, space, &b, &a).unwrap();
            assert_eq!(ab, ba);
        }
    }

    #[test]
    fn norms_of_simple_errors() {
        let g = StaggeredGrid::unit_square(4).unwrap();
        let z1 = Field::zeros(&g, GridFamily::VEdge);
        let z2 = Field::zeros(&g, GridFamily::HEdge);
        let zp = Field::zeros(&g, GridFamily::CellCenter);
        assert_eq!(norms(&g, &z1, &z2, &zp).unwrap(), ErrorNorms::default());

        let e1 = Field::from_interior(&g, GridFamily::VEdge, |_, _| 1.0);
        let nm = norms(&g, &e1, &z2, &zp).unwrap();
        let h: f64 = 0.25;
        assert!((nm.l2_u - (h * h * 3.0 * 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(nm.max_u, 1.0);
        // jumps to the homogeneous ghost (-1) and to the zero boundary column
        assert_eq!(nm.max_grad_u, 8.0);
    }
}
