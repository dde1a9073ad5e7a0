//! Interface representation and its intersection with the grid.
//!
//! A curve is described by a smooth signed function (`level > 0` inside Ω⁺)
//! together with an arclength parametrization. Nodes with `level == 0` belong
//! to Ω⁺. The unit normal points from Ω⁺ into Ω⁻.

use std::f64::consts::PI;
use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::grid::{Axis, GridFamily, StaggeredGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    /// Closed Ω⁺ convention: a zero level belongs to Ω⁺.
    pub fn of(level: f64) -> Side {
        if level >= 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Smooth closed interface with an arclength parametrization `s ∈ [0, S)`.
pub trait InterfaceCurve: Send + Sync + Debug {
    /// Signed indicator: positive in Ω⁺, negative in Ω⁻.
    fn level(&self, p: [f64; 2]) -> f64;

    /// Total arclength `S`.
    fn length(&self) -> f64;

    fn point(&self, s: f64) -> [f64; 2];

    /// Unit tangent `(x', y')`.
    fn tangent(&self, s: f64) -> [f64; 2];

    /// `(x'', y'')` with respect to arclength.
    fn second_derivative(&self, s: f64) -> [f64; 2];

    /// `+1` when the normal is `(y', -x')`, `-1` when it is `(-y', x')`.
    fn orientation(&self) -> f64 {
        1.0
    }

    /// Curve parameter of the point nearest to `p`.
    fn project(&self, p: [f64; 2]) -> f64 {
        newton_projection(self, p)
    }

    fn describe(&self) -> String {
        format!("{self:?}")
    }
}

pub fn side_at(curve: &dyn InterfaceCurve, p: [f64; 2]) -> Side {
    Side::of(curve.level(p))
}

fn wrap(s: f64, period: f64) -> f64 {
    let r = s.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Nearest-point projection by coarse sampling followed by Newton on
/// `(P(s) - p) · T(s) = 0`.
pub fn newton_projection<C: InterfaceCurve + ?Sized>(curve: &C, p: [f64; 2]) -> f64 {
    let len = curve.length();
    let samples = 512;
    let dist2 = |s: f64| {
        let q = curve.point(s);
        (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
    };
    let mut s = (0..samples)
        .map(|k| len * k as f64 / samples as f64)
        .min_by(|a, b| dist2(*a).total_cmp(&dist2(*b)))
        .unwrap_or(0.0);
    for _ in 0..50 {
        let q = curve.point(s);
        let t = curve.tangent(s);
        let k = curve.second_derivative(s);
        let d = [q[0] - p[0], q[1] - p[1]];
        let g = d[0] * t[0] + d[1] * t[1];
        let dg = 1.0 + d[0] * k[0] + d[1] * k[1];
        if dg.abs() < 1e-14 {
            break;
        }
        let step = g / dg;
        s = wrap(s - step, len);
        if step.abs() <= 1e-15 * len {
            break;
        }
    }
    s
}

/// Unit normal (Ω⁺ → Ω⁻), tangent, curvature data and arc-derivative of the
/// normal at one curve parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    pub second: [f64; 2],
    pub normal_prime: [f64; 2],
}

pub fn local_frame(curve: &dyn InterfaceCurve, s: f64) -> LocalFrame {
    let o = curve.orientation();
    let t = curve.tangent(s);
    let k = curve.second_derivative(s);
    LocalFrame {
        normal: [o * t[1], -o * t[0]],
        tangent: t,
        second: k,
        normal_prime: [o * k[1], -o * k[0]],
    }
}

/// Checks at `samples` points that the normal points from Ω⁺ to Ω⁻.
pub fn check_orientation(curve: &dyn InterfaceCurve, samples: usize) -> Result<()> {
    let eps = 1e-6;
    for k in 0..samples {
        let s = curve.length() * k as f64 / samples as f64;
        let p = curve.point(s);
        let n = local_frame(curve, s).normal;
        let out = curve.level([p[0] + eps * n[0], p[1] + eps * n[1]]);
        let inn = curve.level([p[0] - eps * n[0], p[1] - eps * n[1]]);
        if !(out < 0.0 && inn > 0.0) {
            return Err(Error::Geometry(format!(
                "normal at s = {s:.6} does not point from the positive to the negative side"
            )));
        }
    }
    Ok(())
}

/// Circle of radius `r` about `center`, Ω⁺ the enclosed disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle {
    pub fn new(center: [f64; 2], radius: f64) -> Result<Circle> {
        if !(radius > 0.0) {
            return Err(Error::Geometry(format!("circle radius must be positive, got {radius}")));
        }
        Ok(Circle { center, radius })
    }
}

impl InterfaceCurve for Circle {
    fn level(&self, p: [f64; 2]) -> f64 {
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        self.radius * self.radius - (dx * dx + dy * dy)
    }

    fn length(&self) -> f64 {
        2.0 * PI * self.radius
    }

    fn point(&self, s: f64) -> [f64; 2] {
        let th = s / self.radius;
        [
            self.center[0] + self.radius * th.cos(),
            self.center[1] + self.radius * th.sin(),
        ]
    }

    fn tangent(&self, s: f64) -> [f64; 2] {
        let th = s / self.radius;
        [-th.sin(), th.cos()]
    }

    fn second_derivative(&self, s: f64) -> [f64; 2] {
        let th = s / self.radius;
        [-th.cos() / self.radius, -th.sin() / self.radius]
    }

    fn project(&self, p: [f64; 2]) -> f64 {
        let th = (p[1] - self.center[1]).atan2(p[0] - self.center[0]);
        wrap(th * self.radius, self.length())
    }

    fn describe(&self) -> String {
        format!(
            "circle center=({}, {}) r={}",
            self.center[0], self.center[1], self.radius
        )
    }
}

// 10-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_4,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        s += w * (f(mid - half * x) + f(mid + half * x));
    }
    s * half
}

/// Axis-aligned ellipse `((x-cx)/a)² + ((y-cy)/b)² = 1`, Ω⁺ the interior.
///
/// The angle parametrization `(a cos θ, b sin θ)` is converted to arclength
/// with a panel-wise Gauss-Legendre table and Newton inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipse {
    pub center: [f64; 2],
    pub a: f64,
    pub b: f64,
    cumulative: Vec<f64>,
}

const ELLIPSE_PANELS: usize = 256;

impl Ellipse {
    pub fn new(center: [f64; 2], a: f64, b: f64) -> Result<Ellipse> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Geometry(format!(
                "ellipse semi-axes must be positive, got ({a}, {b})"
            )));
        }
        let mut e = Ellipse {
            center,
            a,
            b,
            cumulative: Vec::with_capacity(ELLIPSE_PANELS + 1),
        };
        let dth = 2.0 * PI / ELLIPSE_PANELS as f64;
        let mut acc = 0.0;
        e.cumulative.push(0.0);
        for k in 0..ELLIPSE_PANELS {
            acc += gauss_legendre(|t| e.speed(t), k as f64 * dth, (k + 1) as f64 * dth);
            e.cumulative.push(acc);
        }
        Ok(e)
    }

    fn speed(&self, th: f64) -> f64 {
        (self.a * self.a * th.sin().powi(2) + self.b * self.b * th.cos().powi(2)).sqrt()
    }

    /// Arclength from `θ = 0` to `θ ∈ [0, 2π)`.
    pub fn arclength_of_angle(&self, th: f64) -> f64 {
        let th = th.rem_euclid(2.0 * PI);
        let dth = 2.0 * PI / ELLIPSE_PANELS as f64;
        let k = ((th / dth) as usize).min(ELLIPSE_PANELS - 1);
        self.cumulative[k] + gauss_legendre(|t| self.speed(t), k as f64 * dth, th)
    }

    /// Angle `θ` of arclength position `s`.
    pub fn angle_of_arclength(&self, s: f64) -> f64 {
        let total = self.length();
        let s = wrap(s, total);
        let k = self.cumulative.partition_point(|c| *c <= s).clamp(1, ELLIPSE_PANELS) - 1;
        let dth = 2.0 * PI / ELLIPSE_PANELS as f64;
        let span = self.cumulative[k + 1] - self.cumulative[k];
        let mut th = (k as f64 + (s - self.cumulative[k]) / span) * dth;
        for _ in 0..20 {
            let step = (self.arclength_of_angle(th) - s) / self.speed(th);
            th -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        th
    }

    /// Curvature `ab / (a² sin²θ + b² cos²θ)^{3/2}`.
    pub fn curvature_at_angle(&self, th: f64) -> f64 {
        self.a * self.b / self.speed(th).powi(3)
    }
}

impl InterfaceCurve for Ellipse {
    fn level(&self, p: [f64; 2]) -> f64 {
        let u = (p[0] - self.center[0]) / self.a;
        let v = (p[1] - self.center[1]) / self.b;
        1.0 - u * u - v * v
    }

    fn length(&self) -> f64 {
        self.cumulative[ELLIPSE_PANELS]
    }

    fn point(&self, s: f64) -> [f64; 2] {
        let th = self.angle_of_arclength(s);
        [
            self.center[0] + self.a * th.cos(),
            self.center[1] + self.b * th.sin(),
        ]
    }

    fn tangent(&self, s: f64) -> [f64; 2] {
        let th = self.angle_of_arclength(s);
        let v = self.speed(th);
        [-self.a * th.sin() / v, self.b * th.cos() / v]
    }

    fn second_derivative(&self, s: f64) -> [f64; 2] {
        let th = self.angle_of_arclength(s);
        let (sn, cs) = th.sin_cos();
        let d1 = [-self.a * sn, self.b * cs];
        let d2 = [-self.a * cs, -self.b * sn];
        let v = self.speed(th);
        let dv = (d1[0] * d2[0] + d1[1] * d2[1]) / v;
        let v3 = v * v * v;
        [
            (d2[0] * v - d1[0] * dv) / v3,
            (d2[1] * v - d1[1] * dv) / v3,
        ]
    }

    fn project(&self, p: [f64; 2]) -> f64 {
        let th = ((p[1] - self.center[1]) / self.b).atan2((p[0] - self.center[0]) / self.a);
        self.arclength_of_angle(th)
    }

    fn describe(&self) -> String {
        format!(
            "ellipse center=({}, {}) a={} b={}",
            self.center[0], self.center[1], self.a, self.b
        )
    }
}

/// Intersection of the interface with a grid segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub point: [f64; 2],
    /// Curve parameter of the crossing point.
    pub s: f64,
    pub endpoints: [[f64; 2]; 2],
    pub sides: [Side; 2],
}

/// Locates the interface crossing on the segment `pa`-`pb`, if the endpoints
/// lie on different sides. `h` sets the tolerances (`1e-12 h` on the level
/// residual; crossings within `1e-10 h` of an endpoint snap onto it).
pub fn find_crossing(
    pa: [f64; 2],
    pb: [f64; 2],
    curve: &dyn InterfaceCurve,
    h: f64,
) -> Result<Option<Crossing>> {
    let fa = curve.level(pa);
    let fb = curve.level(pb);
    let sides = [Side::of(fa), Side::of(fb)];
    if sides[0] == sides[1] {
        return Ok(None);
    }
    let at = |t: f64| [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
    let phi = |t: f64| curve.level(at(t));
    let tol = 1e-12 * h;

    let t = if fa == 0.0 {
        0.0
    } else if fb == 0.0 {
        1.0
    } else {
        // Illinois-modified regula falsi on a sign-changing bracket.
        let (mut a, mut b, mut va, mut vb) = (0.0f64, 1.0f64, fa, fb);
        let mut last_kept = 0i8;
        let mut root = None;
        for _ in 0..200 {
            let mut t = (a * vb - b * va) / (vb - va);
            if !(t > a && t < b) {
                t = 0.5 * (a + b);
            }
            let vt = phi(t);
            if vt.abs() <= tol {
                root = Some(t);
                break;
            }
            if (vt > 0.0) == (va > 0.0) {
                a = t;
                va = vt;
                if last_kept == 1 {
                    vb *= 0.5;
                }
                last_kept = 1;
            } else {
                b = t;
                vb = vt;
                if last_kept == -1 {
                    va *= 0.5;
                }
                last_kept = -1;
            }
            if b - a <= f64::EPSILON {
                break;
            }
        }
        root.ok_or_else(|| {
            Error::Numerical(format!(
                "root search on segment ({:.6}, {:.6})-({:.6}, {:.6}) did not reach |level| <= {tol:.1e}",
                pa[0], pa[1], pb[0], pb[1]
            ))
        })?
    };

    let seg = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
    let point = if t * seg <= 1e-10 * h {
        pa
    } else if (1.0 - t) * seg <= 1e-10 * h {
        pb
    } else {
        at(t)
    };
    Ok(Some(Crossing {
        point,
        s: curve.project(point),
        endpoints: [pa, pb],
        sides,
    }))
}

/// The grid lines along which stencil arms run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LineKind {
    /// `y = y_{j-½}`, alternating u1 nodes and cell centers.
    CellRow,
    /// `x = x_{i-½}`, alternating u2 nodes and cell centers.
    CellColumn,
    /// `x = x_i`, alternating u1 nodes and vertices.
    VEdgeColumn,
    /// `y = y_j`, alternating u2 nodes and vertices.
    HEdgeRow,
}

impl LineKind {
    pub const ALL: [LineKind; 4] = [
        LineKind::CellRow,
        LineKind::CellColumn,
        LineKind::VEdgeColumn,
        LineKind::HEdgeRow,
    ];

    /// Axis the line runs along.
    pub fn axis(self) -> Axis {
        match self {
            LineKind::CellRow | LineKind::HEdgeRow => Axis::X,
            LineKind::CellColumn | LineKind::VEdgeColumn => Axis::Y,
        }
    }

    /// Half-index of the fixed coordinate of line `k`.
    pub fn fixed_half(self, k: usize) -> i64 {
        match self {
            LineKind::CellRow | LineKind::CellColumn => 2 * k as i64 - 1,
            LineKind::VEdgeColumn | LineKind::HEdgeRow => 2 * k as i64,
        }
    }

    /// Range of line indices that carry equations.
    pub fn lines(self, n: usize) -> std::ops::RangeInclusive<usize> {
        match self {
            LineKind::CellRow | LineKind::CellColumn => 1..=n,
            LineKind::VEdgeColumn | LineKind::HEdgeRow => 1..=n - 1,
        }
    }

    /// The velocity family whose nodes sit on this line.
    pub fn velocity_family(self) -> GridFamily {
        match self {
            LineKind::CellRow | LineKind::VEdgeColumn => GridFamily::VEdge,
            LineKind::CellColumn | LineKind::HEdgeRow => GridFamily::HEdge,
        }
    }

    /// Whether velocity nodes sit at odd (true) or even half-indices along the line.
    pub fn velocity_on_odd(self) -> bool {
        matches!(self, LineKind::VEdgeColumn | LineKind::HEdgeRow)
    }

    /// Whether the points between velocity nodes are cell centers (pressure).
    pub fn carries_pressure(self) -> bool {
        matches!(self, LineKind::CellRow | LineKind::CellColumn)
    }

    pub fn position(self, grid: &StaggeredGrid, line: usize, half: i64) -> [f64; 2] {
        let fixed = grid.coord(self.axis().other(), self.fixed_half(line));
        let along = grid.coord(self.axis(), half);
        match self.axis() {
            Axis::X => [along, fixed],
            Axis::Y => [fixed, along],
        }
    }
}

/// Side of a lattice point on a grid line given the levels of its two line
/// neighbours. A point where the curve only touches the line (level at
/// round-off scale, neighbours on one side) takes the neighbours' side: the
/// two coincident crossings of a tangential contact cancel.
fn side_on_line(level: f64, before: f64, after: f64) -> Side {
    let (a, b) = (Side::of(before), Side::of(after));
    if a == b && level.abs() <= 1e-12 * (before.abs() + after.abs()) {
        a
    } else {
        Side::of(level)
    }
}

/// A crossing located in the half-segment `[half, half + 1]` of one grid line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCrossing {
    pub kind: LineKind,
    pub line: usize,
    pub half: i64,
    pub crossing: Crossing,
}

/// Enumerates every interface crossing on the grid lines that carry stencil
/// arms, in a fixed order (line kind, line index, position along the line).
///
/// Fails when a stencil arm is cut twice or when the interface comes within
/// half a cell of the boundary.
pub fn line_crossings(grid: &StaggeredGrid, curve: &dyn InterfaceCurve) -> Result<Vec<LineCrossing>> {
    let n = grid.n();
    let last = 2 * n as i64;
    let (lo, hi) = (grid.coord(Axis::X, 1), grid.coord(Axis::X, last - 1));
    let (lo_y, hi_y) = (grid.coord(Axis::Y, 1), grid.coord(Axis::Y, last - 1));
    for k in 0..2048 {
        let p = curve.point(curve.length() * k as f64 / 2048.0);
        let o = grid.origin();
        let l = grid.length();
        let in_domain = p[0] >= o[0] && p[0] <= o[0] + l && p[1] >= o[1] && p[1] <= o[1] + l;
        let in_core = p[0] > lo && p[0] < hi && p[1] > lo_y && p[1] < hi_y;
        if in_domain && !in_core {
            return Err(Error::InterfaceNearBoundary(format!(
                "curve point ({:.6}, {:.6}) lies within half a cell of the boundary",
                p[0], p[1]
            )));
        }
    }
    let mut out = Vec::new();
    for kind in LineKind::ALL {
        for line in kind.lines(n) {
            let levels: Vec<f64> = (0..=last)
                .map(|k| curve.level(kind.position(grid, line, k)))
                .collect();
            let sides: Vec<Side> = (0..=last as usize)
                .map(|k| {
                    if k == 0 || k == last as usize {
                        Side::of(levels[k])
                    } else {
                        side_on_line(levels[k], levels[k - 1], levels[k + 1])
                    }
                })
                .collect();
            let mut prev_cut: Option<i64> = None;
            for k in 0..last {
                if sides[k as usize] == sides[k as usize + 1] {
                    continue;
                }
                if k == 0 || k + 1 == last {
                    return Err(Error::InterfaceNearBoundary(format!(
                        "{kind:?} {line} is cut next to the boundary"
                    )));
                }
                if let Some(p) = prev_cut {
                    // adjacent half-segments form one stencil arm
                    let arm_start_is_node = (p.rem_euclid(2) == 1) == kind.velocity_on_odd();
                    if p + 1 == k && (kind.carries_pressure() || arm_start_is_node) {
                        return Err(Error::GridTooCoarse(format!(
                            "{kind:?} {line}: stencil arm starting at half-index {p} is cut twice"
                        )));
                    }
                }
                prev_cut = Some(k);
                let pa = kind.position(grid, line, k);
                let pb = kind.position(grid, line, k + 1);
                let crossing = find_crossing(pa, pb, curve, grid.h())?
                    .ok_or_else(|| Error::Internal("sign change without crossing".into()))?;
                out.push(LineCrossing {
                    kind,
                    line,
                    half: k,
                    crossing,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeClass {
    RegularPlus,
    RegularMinus,
    Irregular,
}

/// Per-node labels for one grid family (storage order of [`crate::grid::Field`]).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeClassification {
    pub family: GridFamily,
    pub n: usize,
    pub classes: Vec<NodeClass>,
}

impl NodeClassification {
    pub fn get(&self, i: usize, j: usize) -> NodeClass {
        let (x0, x1) = self.family.index_range(Axis::X, self.n);
        let (y0, _) = self.family.index_range(Axis::Y, self.n);
        self.classes[(j - y0) * (x1 - x0 + 1) + (i - x0)]
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }
}

/// Labels every node of `family` regular (Ω⁺ or Ω⁻) or irregular.
///
/// Velocity and vertex nodes use the five-point arms to their same-family
/// neighbours (whose midpoints are checked for a second crossing); cell
/// centers use the four half-cell arms of the divergence stencil.
pub fn classify_nodes(
    grid: &StaggeredGrid,
    curve: &dyn InterfaceCurve,
    family: GridFamily,
) -> Result<NodeClassification> {
    let n = grid.n();
    let (x0, x1) = family.index_range(Axis::X, n);
    let (y0, y1) = family.index_range(Axis::Y, n);
    let lvl = |hx: i64, hy: i64| curve.level([grid.coord(Axis::X, hx), grid.coord(Axis::Y, hy)]);
    // side seen from an arm along (dx, dy)
    let along = |hx: i64, hy: i64, dx: i64, dy: i64| {
        side_on_line(lvl(hx, hy), lvl(hx - dx, hy - dy), lvl(hx + dx, hy + dy))
    };
    let reach: i64 = if family == GridFamily::CellCenter { 1 } else { 2 };
    let mut classes = Vec::with_capacity((x1 - x0 + 1) * (y1 - y0 + 1));
    for j in y0..=y1 {
        for i in x0..=x1 {
            let hx = family.half_index(Axis::X, i);
            let hy = family.half_index(Axis::Y, j);
            let center = Side::of(lvl(hx, hy));
            let mut cut = false;
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let near = along(hx, hy, dx, dy);
                let far = along(hx + reach * dx, hy + reach * dy, dx, dy);
                if far != near {
                    cut = true;
                } else if reach == 2 && along(hx + dx, hy + dy, dx, dy) != near {
                    return Err(Error::GridTooCoarse(format!(
                        "{} node ({i}, {j}) has a stencil arm cut twice",
                        family.name()
                    )));
                }
            }
            classes.push(match (cut, center) {
                (true, _) => NodeClass::Irregular,
                (false, Side::Plus) => NodeClass::RegularPlus,
                (false, Side::Minus) => NodeClass::RegularMinus,
            });
        }
    }
    Ok(NodeClassification { family, n, classes })
}
