//! Interface jumps of velocity derivatives and pressure.
//!
//! Given the traction jump `ψ`, its arc-derivative `ψ'` and the forcing jump
//! `[[f]]`, the jumps needed by the correction terms follow from two small
//! linear systems at each interface point. The first (5x5) combines
//! tangential continuity of `u`, the traction condition and the divergence
//! jump; the second (8x8) differentiates the first-order relations along the
//! curve and adds the jumped momentum equations. Jumps are `v⁺ - v⁻`.
//!
//! The systems are written for unit viscosity. A general `μ` is handled by
//! solving with `ψ/μ`, `ψ'/μ`, `[[f]]/μ` and scaling the pressure jumps back.

use crate::error::{Error, Result};
use crate::geometry::{local_frame, InterfaceCurve, LineCrossing, LocalFrame};
use crate::linalg::{DenseMatrix, Lu};
use crate::par;

/// Interface data evaluated along the curve's arclength parameter.
pub trait InterfaceData: Send + Sync {
    fn mu(&self) -> f64 {
        1.0
    }
    /// Traction jump `ψ(s)`.
    fn psi(&self, s: f64) -> [f64; 2];
    /// `dψ/ds`.
    fn psi_prime(&self, s: f64) -> [f64; 2];
    /// `[[f]](s)`.
    fn f_jump(&self, s: f64) -> [f64; 2];
}

/// Interface data evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceSample {
    pub mu: f64,
    pub psi: [f64; 2],
    pub psi_prime: [f64; 2],
    pub f_jump: [f64; 2],
}

impl InterfaceSample {
    pub fn of(data: &dyn InterfaceData, s: f64) -> InterfaceSample {
        InterfaceSample {
            mu: data.mu(),
            psi: data.psi(s),
            psi_prime: data.psi_prime(s),
            f_jump: data.f_jump(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirstOrderJumps {
    pub u1x: f64,
    pub u1y: f64,
    pub u2x: f64,
    pub u2y: f64,
    pub p: f64,
}

impl FirstOrderJumps {
    pub fn to_array(self) -> [f64; 5] {
        [self.u1x, self.u1y, self.u2x, self.u2y, self.p]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        FirstOrderJumps {
            u1x: v[0],
            u1y: v[1],
            u2x: v[2],
            u2y: v[3],
            p: v[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SecondOrderJumps {
    pub u1xx: f64,
    pub u1xy: f64,
    pub u1yy: f64,
    pub u2xx: f64,
    pub u2xy: f64,
    pub u2yy: f64,
    pub px: f64,
    pub py: f64,
}

impl SecondOrderJumps {
    pub fn to_array(self) -> [f64; 8] {
        [
            self.u1xx, self.u1xy, self.u1yy, self.u2xx, self.u2xy, self.u2yy, self.px, self.py,
        ]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        SecondOrderJumps {
            u1xx: v[0],
            u1xy: v[1],
            u1yy: v[2],
            u2xx: v[3],
            u2xy: v[4],
            u2yy: v[5],
            px: v[6],
            py: v[7],
        }
    }
}

/// All jumps at one interface point. `[[u1]] = [[u2]] = 0` always.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JumpSet {
    pub s: f64,
    pub first: FirstOrderJumps,
    pub second: SecondOrderJumps,
    /// Max-norm residuals of the two linear solves.
    pub residuals: [f64; 2],
}

impl JumpSet {
    pub fn u(&self) -> [f64; 2] {
        [0.0, 0.0]
    }

    /// True when every jump is exactly zero.
    pub fn is_zero(&self) -> bool {
        self.first.to_array().iter().all(|v| *v == 0.0)
            && self.second.to_array().iter().all(|v| *v == 0.0)
    }
}

/// Matrix of the first-order system, unknowns `([[u1_x]], [[u1_y]], [[u2_x]], [[u2_y]], [[p]])`.
pub fn first_order_matrix(frame: &LocalFrame) -> DenseMatrix {
    let [xp, yp] = frame.tangent;
    let [n1, n2] = frame.normal;
    DenseMatrix::from_rows([
        [xp, yp, 0.0, 0.0, 0.0],
        [0.0, 0.0, xp, yp, 0.0],
        [2.0 * n1, n2, n2, 0.0, -n1],
        [0.0, n1, n1, 2.0 * n2, -n2],
        [1.0, 0.0, 0.0, 1.0, 0.0],
    ])
}

/// Matrix of the second-order system, unknowns
/// `([[u1_xx]], [[u1_xy]], [[u1_yy]], [[u2_xx]], [[u2_xy]], [[u2_yy]], [[p_x]], [[p_y]])`.
pub fn second_order_matrix(frame: &LocalFrame) -> DenseMatrix {
    let [xp, yp] = frame.tangent;
    let [n1, n2] = frame.normal;
    DenseMatrix::from_rows([
        [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0, 0.0, -1.0, 0.0, 1.0],
        [xp * xp, 2.0 * xp * yp, yp * yp, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, xp * xp, 2.0 * xp * yp, yp * yp, 0.0, 0.0],
        [
            2.0 * n1 * xp,
            2.0 * n1 * yp + n2 * xp,
            n2 * yp,
            n2 * xp,
            n2 * yp,
            0.0,
            -n1 * xp,
            -n1 * yp,
        ],
        [
            0.0,
            n1 * xp,
            n1 * yp,
            n1 * xp,
            n1 * yp + 2.0 * n2 * xp,
            2.0 * n2 * yp,
            -n2 * xp,
            -n2 * yp,
        ],
    ])
}

/// Right-hand side of the second-order system (unit viscosity form).
pub fn second_order_rhs(
    frame: &LocalFrame,
    first: &FirstOrderJumps,
    psi_prime: [f64; 2],
    f_jump: [f64; 2],
) -> [f64; 8] {
    let [xpp, ypp] = frame.second;
    let [n1p, n2p] = frame.normal_prime;
    let j = first;
    [
        0.0,
        0.0,
        f_jump[0],
        f_jump[1],
        -j.u1x * xpp - j.u1y * ypp,
        -j.u2x * xpp - j.u2y * ypp,
        psi_prime[0] - 2.0 * j.u1x * n1p - (j.u1y + j.u2x) * n2p + j.p * n1p,
        psi_prime[1] - (j.u2x + j.u1y) * n1p - 2.0 * j.u2y * n2p + j.p * n2p,
    ]
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn solve_small(a: &DenseMatrix, b: &[f64], what: &str, frame: &LocalFrame) -> Result<(Vec<f64>, f64)> {
    let diag = || {
        format!(
            "{what} system singular at frame t=({:.6}, {:.6}) n=({:.6}, {:.6})",
            frame.tangent[0], frame.tangent[1], frame.normal[0], frame.normal[1]
        )
    };
    let lu = Lu::factor(a).map_err(|_| Error::Numerical(diag()))?;
    let cond = a.norm1() * lu.inverse_norm1();
    if !(cond <= 1e12) {
        return Err(Error::Numerical(format!("{} (condition {cond:.3e})", diag())));
    }
    let x = lu.solve(b);
    let ax = a.mul_vec(&x);
    let res = ax.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
    Ok((x, res))
}

/// Solves the 5x5 system for the first-order jumps (unit viscosity).
pub fn solve_first_order(frame: &LocalFrame, psi: [f64; 2]) -> Result<(FirstOrderJumps, f64)> {
    let a = first_order_matrix(frame);
    let b = [0.0, 0.0, psi[0], psi[1], 0.0];
    let (x, res) = solve_small(&a, &b, "first-order jump", frame)?;
    let tol = 1e-12 * (1.0 + max_abs(&psi));
    if res > tol {
        return Err(Error::Numerical(format!(
            "first-order jump residual {res:.3e} exceeds {tol:.3e}"
        )));
    }
    Ok((FirstOrderJumps::from_array([x[0], x[1], x[2], x[3], x[4]]), res))
}

/// Solves the 8x8 system for the second-order jumps (unit viscosity).
pub fn solve_second_order(
    frame: &LocalFrame,
    first: &FirstOrderJumps,
    psi_prime: [f64; 2],
    f_jump: [f64; 2],
) -> Result<(SecondOrderJumps, f64)> {
    let a = second_order_matrix(frame);
    let b = second_order_rhs(frame, first, psi_prime, f_jump);
    let (x, res) = solve_small(&a, &b, "second-order jump", frame)?;
    let tol = 1e-10 * (1.0 + max_abs(&b));
    if res > tol {
        return Err(Error::Numerical(format!(
            "second-order jump residual {res:.3e} exceeds {tol:.3e}"
        )));
    }
    let mut v = [0.0; 8];
    v.copy_from_slice(&x);
    Ok((SecondOrderJumps::from_array(v), res))
}

/// Full jump set at curve parameter `s`, for any viscosity.
pub fn jumps_at(curve: &dyn InterfaceCurve, sample: &InterfaceSample, s: f64) -> Result<JumpSet> {
    let mu = sample.mu;
    if !(mu > 0.0) {
        return Err(Error::InvalidProblem(format!("viscosity must be positive, got {mu}")));
    }
    let frame = local_frame(curve, s);
    let scale = |v: [f64; 2]| [v[0] / mu, v[1] / mu];
    let (mut first, r1) = solve_first_order(&frame, scale(sample.psi))?;
    let (mut second, r2) = solve_second_order(&frame, &first, scale(sample.psi_prime), scale(sample.f_jump))?;
    first.p *= mu;
    second.px *= mu;
    second.py *= mu;
    Ok(JumpSet {
        s,
        first,
        second,
        residuals: [r1, r2],
    })
}

/// Jump sets for every crossing, in crossing order.
pub fn jump_table(
    curve: &dyn InterfaceCurve,
    data: &dyn InterfaceData,
    crossings: &[LineCrossing],
) -> Result<Vec<JumpSet>> {
    par::map(crossings, par::thread_count(), |c| {
        let s = c.crossing.s;
        jumps_at(curve, &InterfaceSample::of(data, s), s).map_err(|e| {
            Error::Numerical(format!(
                "at crossing ({:.6}, {:.6}) on {:?} {}: {e}",
                c.crossing.point[0], c.crossing.point[1], c.kind, c.line
            ))
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Circle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn frame_at(theta: f64) -> LocalFrame {
        let c = Circle::new([0.0, 0.0], 1.0).unwrap();
        local_frame(&c, theta)
    }

    #[test]
    fn homogeneous_data_gives_zero_jumps() {
        let f = frame_at(0.3);
        let (j, _) = solve_first_order(&f, [0.0, 0.0]).unwrap();
        assert_eq!(j, FirstOrderJumps::default());
        let line = LocalFrame {
            normal: [0.6, 0.8],
            tangent: [-0.8, 0.6],
            second: [0.0, 0.0],
            normal_prime: [0.0, 0.0],
        };
        let (s, _) = solve_second_order(&line, &j, [0.0, 0.0], [0.0, 0.0]).unwrap();
        assert_eq!(s, SecondOrderJumps::default());
    }

    #[test]
    fn first_order_identities_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let f = frame_at(rng.gen_range(0.0..std::f64::consts::TAU));
            let psi = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let (j, res) = solve_first_order(&f, psi).unwrap();
            assert!(res < 1e-13);
            assert!((j.u1x + j.u2y).abs() < 1e-12);
            let [xp, yp] = f.tangent;
            assert!((j.u1x * xp + j.u1y * yp).abs() < 1e-12);
            assert!((j.u2x * xp + j.u2y * yp).abs() < 1e-12);
        }
    }

    // Each row of the second-order matrix, rebuilt from the identity it
    // encodes, applied as a linear functional to the unit vectors.
    #[test]
    fn second_order_rows_match_their_identities() {
        type Row<'a> = Box<dyn Fn(&[f64; 8]) -> f64 + 'a>;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let f = frame_at(rng.gen_range(0.0..std::f64::consts::TAU));
            let [xp, yp] = f.tangent;
            let [n1, n2] = f.normal;
            // d/ds of a jump g: [[g_x]] x' + [[g_y]] y'
            let ds = |gx: f64, gy: f64| gx * xp + gy * yp;
            let identities: [Row; 8] = [
                // x-derivative of the divergence jump
                Box::new(|j| j[0] + j[4]),
                // y-derivative of the divergence jump
                Box::new(|j| j[1] + j[5]),
                // jumped x-momentum: -[[Δu1]] + [[p_x]]
                Box::new(|j| -j[0] - j[2] + j[6]),
                Box::new(|j| -j[3] - j[5] + j[7]),
                // arc-derivative of [[u1_x]] x' + [[u1_y]] y' (second-order part)
                Box::new(move |j| ds(j[0], j[1]) * xp + ds(j[1], j[2]) * yp),
                Box::new(move |j| ds(j[3], j[4]) * xp + ds(j[4], j[5]) * yp),
                // arc-derivative of the first traction component (second-order part)
                Box::new(move |j| {
                    -ds(j[6], j[7]) * n1
                        + 2.0 * ds(j[0], j[1]) * n1
                        + (ds(j[1], j[2]) + ds(j[3], j[4])) * n2
                }),
                Box::new(move |j| {
                    (ds(j[1], j[2]) + ds(j[3], j[4])) * n1 - ds(j[6], j[7]) * n2
                        + 2.0 * ds(j[4], j[5]) * n2
                }),
            ];
            let m = second_order_matrix(&f);
            for (r, id) in identities.iter().enumerate() {
                for c in 0..8 {
                    let mut e = [0.0; 8];
                    e[c] = 1.0;
                    assert!(
                        (m.get(r, c) - id(&e)).abs() < 1e-15,
                        "row {r} col {c}: {} vs {}",
                        m.get(r, c),
                        id(&e)
                    );
                }
            }
        }
    }

    #[test]
    fn viscosity_scaling() {
        let c = Circle::new([0.0, 0.0], 1.0).unwrap();
        let base = InterfaceSample {
            mu: 1.0,
            psi: [0.4, -1.2],
            psi_prime: [0.3, 0.1],
            f_jump: [1.0, 2.0],
        };
        let scaled = InterfaceSample {
            mu: 3.0,
            psi: [1.2, -3.6],
            psi_prime: [0.9, 0.3],
            f_jump: [3.0, 6.0],
        };
        let a = jumps_at(&c, &base, 0.7).unwrap();
        let b = jumps_at(&c, &scaled, 0.7).unwrap();
        assert!((b.first.u1x - a.first.u1x).abs() < 1e-14);
        assert!((b.first.p - 3.0 * a.first.p).abs() < 1e-13);
        assert!((b.second.px - 3.0 * a.second.px).abs() < 1e-13);
        assert!((b.second.u2yy - a.second.u2yy).abs() < 1e-13);
    }

    #[test]
    fn empty_table() {
        struct Zero;
        impl InterfaceData for Zero {
            fn psi(&self, _: f64) -> [f64; 2] {
                [0.0; 2]
            }
            fn psi_prime(&self, _: f64) -> [f64; 2] {
                [0.0; 2]
            }
            fn f_jump(&self, _: f64) -> [f64; 2] {
                [0.0; 2]
            }
        }
        let c = Circle::new([0.0, 0.0], 1.0).unwrap();
        assert!(jump_table(&c, &Zero, &[]).unwrap().is_empty());
    }
}
