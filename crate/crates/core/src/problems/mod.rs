//! Problem definitions: built-in manufactured interface problems and
//! user problems described by expression-based config files.
//!
//! Ω⁺ is always the bounded region enclosed by the curve.

pub mod config;
pub mod examples;
pub mod expr;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{check_orientation, local_frame, side_at, InterfaceCurve, Side};
use crate::grid::StaggeredGrid;
use crate::jumps::InterfaceData;
use crate::solver::VectorFn;

pub use examples::{example1, example2, smooth};

/// Value and derivatives through second order at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        Jet {
            v,
            ..Jet::default()
        }
    }

    pub fn laplacian(&self) -> f64 {
        self.xx + self.yy
    }
}

/// Piecewise exact solution `(u1, u2, p)`, one smooth branch per side.
/// Each branch must be evaluable slightly beyond its own region.
pub trait ExactSolution: Send + Sync {
    fn jets(&self, side: Side, p: [f64; 2]) -> [Jet; 3];
}

/// Forcing per side.
pub type SideVectorFn = Arc<dyn Fn(Side, [f64; 2]) -> [f64; 2] + Send + Sync>;

/// Complete problem record.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub origin: [f64; 2],
    pub length: f64,
    pub mu: f64,
    pub curve: Arc<dyn InterfaceCurve>,
    pub exact: Option<Arc<dyn ExactSolution>>,
    pub forcing: SideVectorFn,
    pub interface: Arc<dyn InterfaceData>,
    pub boundary: VectorFn,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("origin", &self.origin)
            .field("length", &self.length)
            .field("mu", &self.mu)
            .field("curve", &self.curve.describe())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

/// `-μ Δu + ∇p` from jets.
pub fn forcing_from_jets(mu: f64, j: &[Jet; 3]) -> [f64; 2] {
    [
        -mu * j[0].laplacian() + j[2].x,
        -mu * j[1].laplacian() + j[2].y,
    ]
}

/// Traction `σ(u, p) n` from jets.
pub fn traction(mu: f64, j: &[Jet; 3], n: [f64; 2]) -> [f64; 2] {
    let (u1, u2, p) = (&j[0], &j[1], &j[2]);
    let shear = u1.y + u2.x;
    [
        -p.v * n[0] + mu * (2.0 * u1.x * n[0] + shear * n[1]),
        -p.v * n[1] + mu * (shear * n[0] + 2.0 * u2.y * n[1]),
    ]
}

/// Arc-derivative of the traction along the curve with unit tangent `t`.
pub fn traction_prime(mu: f64, j: &[Jet; 3], t: [f64; 2], n: [f64; 2], np: [f64; 2]) -> [f64; 2] {
    let (u1, u2, p) = (&j[0], &j[1], &j[2]);
    let dt = |gx: f64, gy: f64| gx * t[0] + gy * t[1];
    let p_s = dt(p.x, p.y);
    let u1x_s = dt(u1.xx, u1.xy);
    let u1y_s = dt(u1.xy, u1.yy);
    let u2x_s = dt(u2.xx, u2.xy);
    let u2y_s = dt(u2.xy, u2.yy);
    let shear = u1.y + u2.x;
    let shear_s = u1y_s + u2x_s;
    [
        -p_s * n[0] - p.v * np[0]
            + mu * (2.0 * u1x_s * n[0] + 2.0 * u1.x * np[0] + shear_s * n[1] + shear * np[1]),
        -p_s * n[1] - p.v * np[1]
            + mu * (shear_s * n[0] + shear * np[0] + 2.0 * u2y_s * n[1] + 2.0 * u2.y * np[1]),
    ]
}

/// Interface data derived from an exact solution.
pub struct ExactInterfaceData {
    pub curve: Arc<dyn InterfaceCurve>,
    pub exact: Arc<dyn ExactSolution>,
    pub mu: f64,
}

impl ExactInterfaceData {
    fn both(&self, s: f64) -> ([Jet; 3], [Jet; 3]) {
        let x = self.curve.point(s);
        (self.exact.jets(Side::Plus, x), self.exact.jets(Side::Minus, x))
    }
}

impl InterfaceData for ExactInterfaceData {
    fn mu(&self) -> f64 {
        self.mu
    }

    fn psi(&self, s: f64) -> [f64; 2] {
        let n = local_frame(self.curve.as_ref(), s).normal;
        let (a, b) = self.both(s);
        let (ta, tb) = (traction(self.mu, &a, n), traction(self.mu, &b, n));
        [ta[0] - tb[0], ta[1] - tb[1]]
    }

    fn psi_prime(&self, s: f64) -> [f64; 2] {
        let fr = local_frame(self.curve.as_ref(), s);
        let (a, b) = self.both(s);
        let ta = traction_prime(self.mu, &a, fr.tangent, fr.normal, fr.normal_prime);
        let tb = traction_prime(self.mu, &b, fr.tangent, fr.normal, fr.normal_prime);
        [ta[0] - tb[0], ta[1] - tb[1]]
    }

    fn f_jump(&self, s: f64) -> [f64; 2] {
        let (a, b) = self.both(s);
        let (fa, fb) = (forcing_from_jets(self.mu, &a), forcing_from_jets(self.mu, &b));
        [fa[0] - fb[0], fa[1] - fb[1]]
    }
}

impl ProblemSpec {
    /// Problem whose forcing, interface data and boundary trace all derive
    /// from a piecewise exact solution.
    pub fn from_exact(
        name: impl Into<String>,
        origin: [f64; 2],
        length: f64,
        mu: f64,
        curve: Arc<dyn InterfaceCurve>,
        exact: Arc<dyn ExactSolution>,
    ) -> ProblemSpec {
        let fe = exact.clone();
        let forcing: SideVectorFn = Arc::new(move |side, p| forcing_from_jets(mu, &fe.jets(side, p)));
        let be = exact.clone();
        let bc = curve.clone();
        let boundary: VectorFn = Arc::new(move |p| {
            let j = be.jets(side_at(bc.as_ref(), p), p);
            [j[0].v, j[1].v]
        });
        let interface = Arc::new(ExactInterfaceData {
            curve: curve.clone(),
            exact: exact.clone(),
            mu,
        });
        ProblemSpec {
            name: name.into(),
            origin,
            length,
            mu,
            curve,
            exact: Some(exact),
            forcing,
            interface,
            boundary,
        }
    }

    pub fn grid(&self, n: usize) -> Result<StaggeredGrid> {
        StaggeredGrid::new(n, self.origin, [self.length, self.length])
    }

    pub fn side(&self, p: [f64; 2]) -> Side {
        side_at(self.curve.as_ref(), p)
    }

    /// Forcing of the side containing `p`.
    pub fn forcing_at(&self, p: [f64; 2]) -> [f64; 2] {
        (self.forcing)(self.side(p), p)
    }

    /// Exact jets of the side containing `p`.
    pub fn exact_at(&self, p: [f64; 2]) -> Option<[Jet; 3]> {
        self.exact.as_ref().map(|e| e.jets(self.side(p), p))
    }
}

/// Largest violations found by [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// `max |[[u]]|` on the curve.
    pub continuity: f64,
    /// `max |∇·u|` at sample points of each side.
    pub divergence: f64,
    /// `max |ψ - [[σ n]]|` on the curve.
    pub traction: f64,
    /// `max |f - (-μΔu + ∇p)|` at sample points.
    pub forcing: f64,
    /// Relative mismatch of jet derivatives against centred differences
    /// with step `1e-4`; held to `1e-6` since the stencils are `O(step²)`.
    pub derivatives: f64,
}

impl Diagnostics {
    /// Largest of the exact identities (excludes the derivative check).
    pub fn max_identity(&self) -> f64 {
        self.continuity.max(self.divergence).max(self.traction).max(self.forcing)
    }
}

/// Checks the identities an exact solution must satisfy; fails with the name
/// of the first identity violated by more than `1e-8` (`1e-6` for the
/// finite-difference derivative check).
pub fn validate(spec: &ProblemSpec) -> Result<Diagnostics> {
    let exact = spec
        .exact
        .as_ref()
        .ok_or_else(|| Error::InvalidProblem(format!("{}: no exact solution to validate", spec.name)))?;
    let curve = spec.curve.as_ref();
    check_orientation(curve, 100)?;
    let mut d = Diagnostics::default();

    for k in 0..64 {
        let s = curve.length() * (k as f64 + 0.25) / 64.0;
        let x = curve.point(s);
        let a = exact.jets(Side::Plus, x);
        let b = exact.jets(Side::Minus, x);
        d.continuity = d.continuity.max((a[0].v - b[0].v).abs()).max((a[1].v - b[1].v).abs());
        let n = local_frame(curve, s).normal;
        let (ta, tb) = (traction(spec.mu, &a, n), traction(spec.mu, &b, n));
        let psi = spec.interface.psi(s);
        d.traction = d
            .traction
            .max((psi[0] - (ta[0] - tb[0])).abs())
            .max((psi[1] - (ta[1] - tb[1])).abs());
    }

    // deterministic quasi-random sample points in the domain
    let l = spec.length;
    let step = 1e-4;
    for k in 0..400 {
        let fx = (k as f64 * 0.754_877_666_246_692_7).fract();
        let fy = (k as f64 * 0.569_840_290_998_053_2).fract();
        let p = [spec.origin[0] + l * (0.02 + 0.96 * fx), spec.origin[1] + l * (0.02 + 0.96 * fy)];
        let side = spec.side(p);
        let j = exact.jets(side, p);
        d.divergence = d.divergence.max((j[0].x + j[1].y).abs());
        let f = (spec.forcing)(side, p);
        let fj = forcing_from_jets(spec.mu, &j);
        d.forcing = d.forcing.max((f[0] - fj[0]).abs()).max((f[1] - fj[1]).abs());
        // stay on one side of the interface for the difference stencils
        if curve.level(p).abs() > 0.05 {
            let at = |dx: f64, dy: f64| exact.jets(side, [p[0] + dx, p[1] + dy]);
            let (e, w, nn, s) = (at(step, 0.0), at(-step, 0.0), at(0.0, step), at(0.0, -step));
            for c in 0..3 {
                let fd_x = (e[c].v - w[c].v) / (2.0 * step);
                let fd_y = (nn[c].v - s[c].v) / (2.0 * step);
                let fd_xx = (e[c].x - w[c].x) / (2.0 * step);
                let fd_xy = (nn[c].x - s[c].x) / (2.0 * step);
                let fd_yy = (nn[c].y - s[c].y) / (2.0 * step);
                for (fd, an) in [
                    (fd_x, j[c].x),
                    (fd_y, j[c].y),
                    (fd_xx, j[c].xx),
                    (fd_xy, j[c].xy),
                    (fd_yy, j[c].yy),
                ] {
                    d.derivatives = d.derivatives.max((fd - an).abs() / (1.0 + an.abs()));
                }
            }
        }
    }

    let checks = [
        ("velocity continuity [[u]] = 0", d.continuity, 1e-8),
        ("divergence-free velocity", d.divergence, 1e-8),
        ("traction jump consistency", d.traction, 1e-8),
        ("forcing consistency f = -μΔu + ∇p", d.forcing, 1e-8),
        ("jet derivative consistency", d.derivatives, 1e-6),
    ];
    for (name, v, limit) in checks {
        if !(v <= limit) {
            return Err(Error::InvalidProblem(format!(
                "{}: {name} violated by {v:.3e}",
                spec.name
            )));
        }
    }
    Ok(d)
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 3] = ["example1", "example2", "smooth"];

pub fn builtin(name: &str) -> Result<ProblemSpec> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        "smooth" => Ok(smooth()),
        other => Err(Error::InvalidProblem(format!(
            "unknown problem '{other}' (built-ins: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

/// A built-in name or a path to a config file.
pub fn load(name_or_path: &str) -> Result<ProblemSpec> {
    if BUILTIN_NAMES.contains(&name_or_path) {
        builtin(name_or_path)
    } else if std::path::Path::new(name_or_path).exists() {
        config::load_file(name_or_path)
    } else {
        builtin(name_or_path)
    }
}
