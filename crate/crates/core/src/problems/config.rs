//! Loader for user problems written as `key = value` lines.
//!
//! ```text
//! # comments start with '#'
//! name = bubble
//! domain.origin = -2 -2
//! domain.length = 4
//! mu = 1
//! curve = circle 0 0 1          # or: ellipse cx cy a b
//!
//! # either an exact solution (inside = Ω⁺, outside = Ω⁻) ...
//! u1.in  = y/4*(x^2+y^2)
//! u1.out = y/sqrt(x^2+y^2) - 0.75*y
//! ...
//! # ... or raw data: f1.in f1.out f2.in f2.out psi1 psi2 ub1 ub2
//! ```
//!
//! Exact problems are validated on load. Data problems take `ψ'` from
//! centred differences along the curve.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::expr::{Expr, ExprJet};
use super::{validate, ExactSolution, Jet, ProblemSpec, SideVectorFn};
use crate::error::{Error, Result};
use crate::geometry::{Circle, Ellipse, InterfaceCurve, Side};
use crate::jumps::InterfaceData;
use crate::solver::VectorFn;

const EXACT_KEYS: [&str; 6] = ["u1.in", "u1.out", "u2.in", "u2.out", "p.in", "p.out"];
const DATA_KEYS: [&str; 8] = ["f1.in", "f1.out", "f2.in", "f2.out", "psi1", "psi2", "ub1", "ub2"];
const COMMON_KEYS: [&str; 5] = ["name", "domain.origin", "domain.length", "mu", "curve"];

/// Piecewise exact solution given by expressions.
#[derive(Debug, Clone)]
pub struct ExprSolution {
    /// `[u1, u2, p]` on Ω⁺ and on Ω⁻.
    pub plus: [ExprJet; 3],
    pub minus: [ExprJet; 3],
}

impl ExactSolution for ExprSolution {
    fn jets(&self, side: Side, p: [f64; 2]) -> [Jet; 3] {
        let set = match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        };
        [set[0].at(p), set[1].at(p), set[2].at(p)]
    }
}

/// Interface data given directly by expressions evaluated on the curve.
pub struct DataInterface {
    curve: Arc<dyn InterfaceCurve>,
    psi: [Expr; 2],
    f_in: [Expr; 2],
    f_out: [Expr; 2],
    mu: f64,
}

impl InterfaceData for DataInterface {
    fn mu(&self) -> f64 {
        self.mu
    }

    fn psi(&self, s: f64) -> [f64; 2] {
        let x = self.curve.point(s);
        [self.psi[0].eval(x), self.psi[1].eval(x)]
    }

    fn psi_prime(&self, s: f64) -> [f64; 2] {
        let ds = 1e-5 * self.curve.length();
        let (a, b) = (self.psi(s + ds), self.psi(s - ds));
        [(a[0] - b[0]) / (2.0 * ds), (a[1] - b[1]) / (2.0 * ds)]
    }

    fn f_jump(&self, s: f64) -> [f64; 2] {
        let x = self.curve.point(s);
        [
            self.f_in[0].eval(x) - self.f_out[0].eval(x),
            self.f_in[1].eval(x) - self.f_out[1].eval(x),
        ]
    }
}

fn parse_lines(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse(format!("line {}: expected 'key = value'", no + 1)));
        };
        let key = k.trim().to_string();
        let known = COMMON_KEYS.contains(&key.as_str())
            || EXACT_KEYS.contains(&key.as_str())
            || DATA_KEYS.contains(&key.as_str());
        if !known {
            return Err(Error::Parse(format!("line {}: unknown key '{key}'", no + 1)));
        }
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Parse(format!("line {}: duplicate key '{key}'", no + 1)));
        }
    }
    Ok(map)
}

fn numbers(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("{key}: '{t}' is not a number")))
        })
        .collect()
}

fn parse_curve(v: &str) -> Result<Arc<dyn InterfaceCurve>> {
    let mut parts = v.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let rest: Vec<&str> = parts.collect();
    let nums = numbers("curve", &rest.join(" "))?;
    match (kind, nums.as_slice()) {
        ("circle", [cx, cy, r]) => Ok(Arc::new(Circle::new([*cx, *cy], *r)?)),
        ("ellipse", [cx, cy, a, b]) => Ok(Arc::new(Ellipse::new([*cx, *cy], *a, *b)?)),
        _ => Err(Error::Parse(format!(
            "curve: expected 'circle cx cy r' or 'ellipse cx cy a b', got '{v}'"
        ))),
    }
}

/// Builds a problem from config text.
pub fn parse(text: &str) -> Result<ProblemSpec> {
    let map = parse_lines(text)?;
    let get = |k: &str| map.get(k).map(String::as_str);
    let require = |k: &str| get(k).ok_or_else(|| Error::Parse(format!("missing key '{k}'")));

    let name = get("name").unwrap_or("user").to_string();
    let origin = match numbers("domain.origin", require("domain.origin")?)?.as_slice() {
        [x, y] => [*x, *y],
        _ => return Err(Error::Parse("domain.origin: expected two numbers".into())),
    };
    let length = match numbers("domain.length", require("domain.length")?)?.as_slice() {
        [l] if *l > 0.0 && l.is_finite() => *l,
        _ => return Err(Error::Parse("domain.length: expected one positive number".into())),
    };
    let mu = match get("mu") {
        None => 1.0,
        Some(v) => match numbers("mu", v)?.as_slice() {
            [m] if *m > 0.0 && m.is_finite() => *m,
            _ => return Err(Error::Parse("mu: expected one positive number".into())),
        },
    };
    let curve = parse_curve(require("curve")?)?;

    let has_exact = EXACT_KEYS.iter().any(|k| map.contains_key(*k));
    let has_data = DATA_KEYS.iter().any(|k| map.contains_key(*k));
    if has_exact && has_data {
        return Err(Error::Parse(
            "give either an exact solution (u1/u2/p) or raw data (f/psi/ub), not both".into(),
        ));
    }
    let expr = |k: &str| -> Result<Expr> { Expr::parse(require(k)?) };

    if has_exact {
        let jet = |k: &str| -> Result<ExprJet> { expr(k).map(ExprJet::new) };
        let exact = ExprSolution {
            plus: [jet("u1.in")?, jet("u2.in")?, jet("p.in")?],
            minus: [jet("u1.out")?, jet("u2.out")?, jet("p.out")?],
        };
        let spec = ProblemSpec::from_exact(name, origin, length, mu, curve, Arc::new(exact));
        validate(&spec)?;
        return Ok(spec);
    }
    if !has_data {
        return Err(Error::Parse("no problem data: expected u1/u2/p or f/psi/ub keys".into()));
    }

    let f_in = [expr("f1.in")?, expr("f2.in")?];
    let f_out = [expr("f1.out")?, expr("f2.out")?];
    let ub = [expr("ub1")?, expr("ub2")?];
    let (fi, fo) = (f_in.clone(), f_out.clone());
    let forcing: SideVectorFn = Arc::new(move |side, p| {
        let f = if side == Side::Plus { &fi } else { &fo };
        [f[0].eval(p), f[1].eval(p)]
    });
    let boundary: VectorFn = Arc::new(move |p| [ub[0].eval(p), ub[1].eval(p)]);
    let interface = Arc::new(DataInterface {
        curve: curve.clone(),
        psi: [expr("psi1")?, expr("psi2")?],
        f_in,
        f_out,
        mu,
    });
    Ok(ProblemSpec {
        name,
        origin,
        length,
        mu,
        curve,
        exact: None,
        forcing,
        interface,
        boundary,
    })
}

pub fn load_file(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}
