//! Built-in manufactured problems with hand-differentiated jets.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{ExactSolution, Jet, ProblemSpec};
use crate::geometry::{Circle, Ellipse, Side};

type JetFn = fn([f64; 2]) -> [Jet; 3];

/// Exact solution given by one jet function per side.
#[derive(Clone, Copy)]
pub struct PiecewiseJets {
    pub plus: JetFn,
    pub minus: JetFn,
}

impl ExactSolution for PiecewiseJets {
    fn jets(&self, side: Side, p: [f64; 2]) -> [Jet; 3] {
        match side {
            Side::Plus => (self.plus)(p),
            Side::Minus => (self.minus)(p),
        }
    }
}

fn jet(v: f64, x: f64, y: f64, xx: f64, xy: f64, yy: f64) -> Jet {
    Jet { v, x, y, xx, xy, yy }
}

/// `(-3/4 x³ + 3/8 x) y`
fn cubic_pressure(x: f64, y: f64) -> Jet {
    let a = -0.75 * x * x * x + 0.375 * x;
    let ax = -2.25 * x * x + 0.375;
    jet(a * y, ax * y, a, -4.5 * x * y, ax, 0.0)
}

/// `-x y² / 4`
fn shear_u2(x: f64, y: f64) -> Jet {
    jet(-x * y * y / 4.0, -y * y / 4.0, -x * y / 2.0, 0.0, -y / 2.0, -x / 2.0)
}

fn example1_inside(p: [f64; 2]) -> [Jet; 3] {
    let [x, y] = p;
    let u1 = jet(
        y * (x * x + y * y) / 4.0,
        x * y / 2.0,
        (x * x + 3.0 * y * y) / 4.0,
        y / 2.0,
        x / 2.0,
        1.5 * y,
    );
    [u1, shear_u2(x, y), Jet::constant(5.0)]
}

fn example1_outside(p: [f64; 2]) -> [Jet; 3] {
    let [x, y] = p;
    let r2 = x * x + y * y;
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    // y/r and x/r with their derivatives
    let q = jet(
        y / r,
        -x * y / r3,
        x * x / r3,
        -y / r3 + 3.0 * x * x * y / r5,
        -x / r3 + 3.0 * x * y * y / r5,
        -3.0 * x * x * y / r5,
    );
    let w = jet(
        x / r,
        y * y / r3,
        -x * y / r3,
        -3.0 * x * y * y / r5,
        -y / r3 + 3.0 * x * x * y / r5,
        -x / r3 + 3.0 * x * y * y / r5,
    );
    let u1 = jet(q.v - 0.75 * y, q.x, q.y - 0.75, q.xx, q.xy, q.yy);
    let u2 = jet(
        -w.v + 0.75 * x + 0.25 * x * x * x,
        -w.x + 0.75 + 0.75 * x * x,
        -w.y,
        -w.xx + 1.5 * x,
        -w.xy,
        -w.yy,
    );
    [u1, u2, cubic_pressure(x, y)]
}

fn example2_inside(p: [f64; 2]) -> [Jet; 3] {
    let [x, y] = p;
    let u1 = jet(y / 4.0, 0.0, 0.25, 0.0, 0.0, 0.0);
    let u2 = jet(
        (x * x * x - x) / 16.0,
        (3.0 * x * x - 1.0) / 16.0,
        0.0,
        6.0 * x / 16.0,
        0.0,
        0.0,
    );
    [u1, u2, cubic_pressure(x, y)]
}

fn example2_outside(p: [f64; 2]) -> [Jet; 3] {
    let [x, y] = p;
    let u1 = jet(
        y * (x * x + 4.0 * y * y) / 4.0,
        x * y / 2.0,
        (x * x + 12.0 * y * y) / 4.0,
        y / 2.0,
        x / 2.0,
        6.0 * y,
    );
    [u1, shear_u2(x, y), Jet::constant(0.0)]
}

fn smooth_fields(p: [f64; 2]) -> [Jet; 3] {
    let (sx, cx) = (PI * p[0]).sin_cos();
    let (sy, cy) = (PI * p[1]).sin_cos();
    let k2 = PI * PI;
    let u1 = jet(sx * cy, PI * cx * cy, -PI * sx * sy, -k2 * sx * cy, -k2 * cx * sy, -k2 * sx * cy);
    let u2 = jet(-cx * sy, PI * sx * sy, -PI * cx * cy, k2 * cx * sy, k2 * sx * cy, k2 * cx * sy);
    let pr = jet(cx * cy, -PI * sx * cy, -PI * cx * sy, -k2 * cx * cy, k2 * sx * sy, -k2 * cx * cy);
    [u1, u2, pr]
}

/// Unit circle in `(-2,2)²`; the pressure jumps by `[[p]] = 5` at `(1,0)`.
pub fn example1() -> ProblemSpec {
    ProblemSpec::from_exact(
        "example1",
        [-2.0, -2.0],
        4.0,
        1.0,
        Arc::new(Circle::new([0.0, 0.0], 1.0).expect("valid circle")),
        Arc::new(PiecewiseJets {
            plus: example1_inside,
            minus: example1_outside,
        }),
    )
}

/// Ellipse `x² + 4y² = 1` in `(-2,2)²`.
pub fn example2() -> ProblemSpec {
    ProblemSpec::from_exact(
        "example2",
        [-2.0, -2.0],
        4.0,
        1.0,
        Arc::new(Ellipse::new([0.0, 0.0], 1.0, 0.5).expect("valid ellipse")),
        Arc::new(PiecewiseJets {
            plus: example2_inside,
            minus: example2_outside,
        }),
    )
}

/// Smooth Taylor–Green type flow in `(-1,1)²` with a circle of radius 1/2
/// that carries no jumps. The corrected scheme reduces to plain MAC here.
pub fn smooth() -> ProblemSpec {
    ProblemSpec::from_exact(
        "smooth",
        [-1.0, -1.0],
        2.0,
        1.0,
        Arc::new(Circle::new([0.0, 0.0], 0.5).expect("valid circle")),
        Arc::new(PiecewiseJets {
            plus: smooth_fields,
            minus: smooth_fields,
        }),
    )
}
