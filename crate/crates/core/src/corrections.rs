//! Interface correction terms and the corrected right-hand side.
//!
//! The discrete equations are
//!
//! ```text
//! -Δ_h u1 + δ⁺_x p = f̃1     at u1 unknowns
//! -Δ_h u2 + δ⁺_y p = f̃2     at u2 unknowns
//!  δ⁻_x u1 + δ⁻_y u2 = g̃     at cells
//! ```
//!
//! When a stencil arm joins its center to a far point on the other side of
//! the interface, the far value differs from the smooth extension of the
//! center's side by `σ J`, where `σ = ±1` is the side of the center and `J` is
//! the Taylor series of the jump about the crossing, evaluated at the offset
//! `d = (far coordinate) - (crossing coordinate)`:
//!
//! ```text
//! velocity:  J = [[u]] + d [[u_a]] + d²/2 [[u_aa]]
//! pressure:  J = [[p]] + d [[p_a]]
//! ```
//!
//! If `c` is the coefficient of the far value in the left-hand operator, the
//! correction added to the right-hand side is `-c σ J`:
//!
//! | operator   | far point             | `c`      | correction |
//! |------------|-----------------------|----------|------------|
//! | `-Δ_h`     | either neighbour      | `-1/h²`  | `+σJ/h²`   |
//! | `δ⁺ p`     | forward cell center   | `+1/h`   | `-σJ/h`    |
//! | `δ⁺ p`     | backward cell center  | `-1/h`   | `+σJ/h`    |
//! | `δ⁻ u`     | forward velocity node | `+1/h`   | `-σJ/h`    |
//! | `δ⁻ u`     | backward velocity node| `-1/h`   | `+σJ/h`    |
//!
//! This one rule covers every cut-arm configuration: the Laplacian arms in
//! both directions, the pressure-gradient arms on either side of a velocity
//! node and the divergence arms on either side of a cell center.
//!
//! Crossings are processed once each. A crossing on a cell row (or column)
//! lies between a velocity node and a cell center, so it cuts one Laplacian
//! arm (two corrections, one per end), one pressure arm and one divergence
//! arm. A crossing on a vertex line only cuts a Laplacian arm.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{LineCrossing, Side};
use crate::grid::{Axis, Field, GridFamily, StaggeredGrid};
use crate::jumps::JumpSet;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    U1,
    U2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GradientQuantity {
    /// `δ⁺_x p` in the first momentum equation.
    Px,
    /// `δ⁺_y p` in the second momentum equation.
    Py,
    /// `δ⁻_x u1` in the divergence equation.
    U1x,
    /// `δ⁻_y u2` in the divergence equation.
    U2y,
}

/// Position of the far point relative to the stencil center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FarNeighbour {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorrectionKind {
    Laplacian,
    PressureGradient,
    Divergence,
}

fn velocity_series(j: &JumpSet, component: Component, axis: Axis, d: f64) -> f64 {
    let (a, aa) = match (component, axis) {
        (Component::U1, Axis::X) => (j.first.u1x, j.second.u1xx),
        (Component::U1, Axis::Y) => (j.first.u1y, j.second.u1yy),
        (Component::U2, Axis::X) => (j.first.u2x, j.second.u2xx),
        (Component::U2, Axis::Y) => (j.first.u2y, j.second.u2yy),
    };
    let u = j.u()[match component {
        Component::U1 => 0,
        Component::U2 => 1,
    }];
    u + d * a + 0.5 * d * d * aa
}

fn pressure_series(j: &JumpSet, axis: Axis, d: f64) -> f64 {
    let a = match axis {
        Axis::X => j.second.px,
        Axis::Y => j.second.py,
    };
    j.first.p + d * a
}

fn check_offset(offset: f64, limit: f64) -> Result<()> {
    if !(offset.abs() <= limit * (1.0 + 1e-12)) {
        return Err(Error::Geometry(format!(
            "offset {offset:.6e} exceeds the stencil arm length {limit:.6e}"
        )));
    }
    Ok(())
}

/// Correction of `-Δ_h` for one cut arm; `offset` is far minus crossing
/// coordinate along `axis`.
pub fn laplacian_correction(
    h: f64,
    jumps: &JumpSet,
    center: Side,
    component: Component,
    axis: Axis,
    offset: f64,
) -> Result<f64> {
    check_offset(offset, h)?;
    Ok(center.sign() * velocity_series(jumps, component, axis, offset) / (h * h))
}

/// Correction of a first difference for one cut half-cell arm.
pub fn gradient_correction(
    h: f64,
    jumps: &JumpSet,
    center: Side,
    quantity: GradientQuantity,
    far: FarNeighbour,
    offset: f64,
) -> Result<f64> {
    check_offset(offset, 0.5 * h)?;
    let series = match quantity {
        GradientQuantity::Px => pressure_series(jumps, Axis::X, offset),
        GradientQuantity::Py => pressure_series(jumps, Axis::Y, offset),
        GradientQuantity::U1x => velocity_series(jumps, Component::U1, Axis::X, offset),
        GradientQuantity::U2y => velocity_series(jumps, Component::U2, Axis::Y, offset),
    };
    let coeff = match far {
        FarNeighbour::Forward => 1.0 / h,
        FarNeighbour::Backward => -1.0 / h,
    };
    Ok(-coeff * center.sign() * series)
}

/// One contribution to a correction entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    /// Index into the crossing list.
    pub crossing: usize,
    pub kind: CorrectionKind,
    pub value: f64,
}

type Key = (GridFamily, usize, usize);

/// Sparse additive corrections keyed by `(family, i, j)`: `VEdge`/`HEdge`
/// entries feed the momentum equations, `CellCenter` entries the divergence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorrectionField {
    entries: BTreeMap<Key, f64>,
    provenance: Option<BTreeMap<Key, Vec<Contribution>>>,
}

impl CorrectionField {
    pub fn new(track_provenance: bool) -> Self {
        CorrectionField {
            entries: BTreeMap::new(),
            provenance: track_provenance.then(BTreeMap::new),
        }
    }

    pub fn add(&mut self, family: GridFamily, i: usize, j: usize, c: Contribution) {
        *self.entries.entry((family, i, j)).or_insert(0.0) += c.value;
        if let Some(p) = &mut self.provenance {
            p.entry((family, i, j)).or_default().push(c);
        }
    }

    pub fn get(&self, family: GridFamily, i: usize, j: usize) -> f64 {
        self.entries.get(&(family, i, j)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (GridFamily, usize, usize, f64)> + '_ {
        self.entries.iter().map(|(k, v)| (k.0, k.1, k.2, *v))
    }

    pub fn count(&self, family: GridFamily) -> usize {
        self.entries.keys().filter(|k| k.0 == family).count()
    }

    pub fn provenance(&self, family: GridFamily, i: usize, j: usize) -> Option<&[Contribution]> {
        self.provenance.as_ref()?.get(&(family, i, j)).map(|v| v.as_slice())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `family,i,j,value` lines with a header, shortest round-trip floats.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,i,j,value\n");
        for (f, i, j, v) in self.iter() {
            let _ = writeln!(out, "{},{i},{j},{v}", f.name());
        }
        out
    }
}

fn is_unknown(family: GridFamily, n: usize, i: i64, j: i64) -> bool {
    let (x0, x1) = family.interior_range(Axis::X, n);
    let (y0, y1) = family.interior_range(Axis::Y, n);
    i >= x0 as i64 && i <= x1 as i64 && j >= y0 as i64 && j <= y1 as i64
}

fn component_of(family: GridFamily) -> Component {
    if family == GridFamily::VEdge {
        Component::U1
    } else {
        Component::U2
    }
}

/// Every correction produced by one crossing, as `(family, i, j, contribution)`.
pub fn crossing_contributions(
    grid: &StaggeredGrid,
    index: usize,
    lc: &LineCrossing,
    jumps: &JumpSet,
) -> Result<Vec<(GridFamily, usize, usize, Contribution)>> {
    let n = grid.n();
    let h = grid.h();
    let kind = lc.kind;
    let axis = kind.axis();
    let fixed = kind.fixed_half(lc.line);
    let star = lc.crossing.point[axis.index()];
    let k = lc.half;
    let [side_lo, side_hi] = lc.crossing.sides;
    let vfam = kind.velocity_family();
    let comp = component_of(vfam);
    let coord = |half: i64| grid.coord(axis, half);
    // (family, half along the line) -> storage index if it is an unknown
    let index_of = |fam: GridFamily, half: i64| -> Option<(usize, usize)> {
        let (hx, hy) = match axis {
            Axis::X => (half, fixed),
            Axis::Y => (fixed, half),
        };
        let i = fam.index_of_half(Axis::X, hx)?;
        let j = fam.index_of_half(Axis::Y, hy)?;
        is_unknown(fam, n, i, j).then_some((i as usize, j as usize))
    };

    let mut out = Vec::with_capacity(4);
    let mut push = |fam: GridFamily, at: Option<(usize, usize)>, kind: CorrectionKind, value: f64| {
        if let Some((i, j)) = at {
            if value != 0.0 {
                out.push((
                    fam,
                    i,
                    j,
                    Contribution {
                        crossing: index,
                        kind,
                        value,
                    },
                ));
            }
        }
    };

    // Laplacian arm (a, a + 2) between two velocity nodes.
    let node_on = |half: i64| (half.rem_euclid(2) == 1) == kind.velocity_on_odd();
    let a = if node_on(k) { k } else { k - 1 };
    let (side_a, side_b) = (side_lo, side_hi);
    let lap_a = laplacian_correction(h, jumps, side_a, comp, axis, coord(a + 2) - star)?;
    let lap_b = laplacian_correction(h, jumps, side_b, comp, axis, coord(a) - star)?;
    push(vfam, index_of(vfam, a), CorrectionKind::Laplacian, lap_a);
    push(vfam, index_of(vfam, a + 2), CorrectionKind::Laplacian, lap_b);

    if kind.carries_pressure() {
        let (pq, dq) = match axis {
            Axis::X => (GradientQuantity::Px, GradientQuantity::U1x),
            Axis::Y => (GradientQuantity::Py, GradientQuantity::U2y),
        };
        let cell = GridFamily::CellCenter;
        if node_on(k) {
            // node at k, cell center at k + 1
            let cp = gradient_correction(h, jumps, side_lo, pq, FarNeighbour::Forward, coord(k + 1) - star)?;
            push(vfam, index_of(vfam, k), CorrectionKind::PressureGradient, cp);
            let cd = gradient_correction(h, jumps, side_hi, dq, FarNeighbour::Backward, coord(k) - star)?;
            push(cell, index_of(cell, k + 1), CorrectionKind::Divergence, cd);
        } else {
            // cell center at k, node at k + 1
            let cp = gradient_correction(h, jumps, side_hi, pq, FarNeighbour::Backward, coord(k) - star)?;
            push(vfam, index_of(vfam, k + 1), CorrectionKind::PressureGradient, cp);
            let cd = gradient_correction(h, jumps, side_lo, dq, FarNeighbour::Forward, coord(k + 1) - star)?;
            push(cell, index_of(cell, k), CorrectionKind::Divergence, cd);
        }
    }
    Ok(out)
}

/// Accumulates the corrections of all crossings. Per-crossing work may run
/// in parallel; the reduction follows crossing order.
pub fn build_corrections(
    grid: &StaggeredGrid,
    crossings: &[LineCrossing],
    jumps: &[JumpSet],
    track_provenance: bool,
) -> Result<CorrectionField> {
    if crossings.len() != jumps.len() {
        return Err(Error::Internal(format!(
            "{} crossings but {} jump sets",
            crossings.len(),
            jumps.len()
        )));
    }
    let indexed: Vec<usize> = (0..crossings.len()).collect();
    let parts = par::map(&indexed, par::thread_count(), |&k| {
        crossing_contributions(grid, k, &crossings[k], &jumps[k])
    });
    let mut field = CorrectionField::new(track_provenance);
    for part in parts {
        for (fam, i, j, c) in part? {
            field.add(fam, i, j, c);
        }
    }
    Ok(field)
}

/// Corrected right-hand side of the modified scheme.
#[derive(Debug, Clone)]
pub struct CorrectedRhs {
    pub f1: Field,
    pub f2: Field,
    pub g: Field,
    pub corrections: CorrectionField,
}

/// Samples the side-resolved forcing at the velocity unknowns and adds the
/// corrections. Boundary contributions are added later by the solver.
pub fn assemble_rhs(
    grid: &StaggeredGrid,
    forcing: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
    corrections: CorrectionField,
) -> Result<CorrectedRhs> {
    let mut f1 = Field::from_interior(grid, GridFamily::VEdge, |i, j| {
        forcing(GridFamily::VEdge.position(grid, i, j))[0]
    });
    let mut f2 = Field::from_interior(grid, GridFamily::HEdge, |i, j| {
        forcing(GridFamily::HEdge.position(grid, i, j))[1]
    });
    let mut g = Field::zeros(grid, GridFamily::CellCenter);
    let n = grid.n();
    for (fam, i, j, v) in corrections.iter() {
        if !is_unknown(fam, n, i as i64, j as i64) {
            return Err(Error::Internal(format!(
                "correction at non-unknown {} ({i}, {j})",
                fam.name()
            )));
        }
        match fam {
            GridFamily::VEdge => f1.add(i, j, v),
            GridFamily::HEdge => f2.add(i, j, v),
            GridFamily::CellCenter => g.add(i, j, v),
            GridFamily::Vertex => {
                return Err(Error::Internal("correction on a vertex".into()));
            }
        }
    }
    Ok(CorrectedRhs {
        f1,
        f2,
        g,
        corrections,
    })
}
