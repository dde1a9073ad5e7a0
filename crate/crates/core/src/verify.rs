//! Self-checks run by `stokes-mac verify`.
//!
//! Each check is cheap (coarse grids) and reports the worst deviation it saw
//! next to the limit it was held to.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::Side;
use crate::grid::{apply_ghost_closure, diff_backward, diff_forward, inner_product, laplacian, Axis, Field, GridFamily, Space, StaggeredGrid};
use crate::jumps::{jumps_at, InterfaceSample};
use crate::problems::{example1, example2, smooth, validate, ProblemSpec};
use crate::solver::{
    schur_apply, solve_problem, AugmentedSystem, DensePoisson, Layout, PoissonSolver, SolveOptions,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub worst: f64,
    pub limit: f64,
}

impl Check {
    fn new(name: impl Into<String>, worst: f64, limit: f64) -> Check {
        Check {
            name: name.into(),
            worst,
            limit,
        }
    }

    pub fn passed(&self) -> bool {
        self.worst <= self.limit
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:<44} worst {:.3e} (limit {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.limit
        )
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_velocity(grid: &StaggeredGrid, fam: GridFamily, r: &mut ChaCha8Rng) -> Result<Field> {
    apply_ghost_closure(grid, Field::from_interior(grid, fam, |_, _| r.gen_range(-1.0..1.0)), None)
}

/// Fast sine-transform solves against a dense LU solve.
pub fn poisson_vs_dense(n: usize, samples: usize) -> Result<Check> {
    let grid = StaggeredGrid::new(n, [-2.0, -2.0], [4.0, 4.0])?;
    let fast = PoissonSolver::new(&grid);
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for fam in [GridFamily::VEdge, GridFamily::HEdge] {
        let dense = DensePoisson::new(&grid, fam)?;
        let len = Layout::of(fam, n).len();
        for _ in 0..samples {
            let f: Vec<f64> = (0..len).map(|_| r.gen_range(-1.0..1.0)).collect();
            let a = fast.solve(fam, &f)?;
            let b = dense.solve(&f);
            let num = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
            worst = worst.max(num / den);
        }
    }
    Ok(Check::new(format!("FFT Poisson vs dense LU (N={n})"), worst, 1e-11))
}

/// The four summation-by-parts identities on random fields.
pub fn green_identities(n: usize, samples: usize) -> Result<Vec<Check>> {
    let grid = StaggeredGrid::new(n, [0.0, 0.0], [1.0, 1.0])?;
    let mut r = rng(5 + n as u64);
    let mut worst = [0.0f64; 4];
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..samples {
        let q = Field::from_interior(&grid, GridFamily::CellCenter, |_, _| r.gen_range(-1.0..1.0));
        let v1 = random_velocity(&grid, GridFamily::VEdge, &mut r)?;
        let w1 = random_velocity(&grid, GridFamily::VEdge, &mut r)?;
        let v2 = random_velocity(&grid, GridFamily::HEdge, &mut r)?;
        let w2 = random_velocity(&grid, GridFamily::HEdge, &mut r)?;

        for (k, (v, axis, space)) in [(&v1, Axis::X, Space::V1), (&v2, Axis::Y, Space::V2)].into_iter().enumerate() {
            let gq = diff_forward(&grid, &q, axis)?;
            let dv = diff_backward(&grid, v, axis)?;
            let lhs = inner_product(&grid, space, &gq, v)?;
            let rhs = -inner_product(&grid, Space::M, &q, &dv)?;
            worst[k] = worst[k].max(rel(lhs, rhs));
        }
        for (k, (v, w, space, sx, sy)) in [
            (&v1, &w1, Space::V1, Space::M, Space::W1),
            (&v2, &w2, Space::V2, Space::W2, Space::M),
        ]
        .into_iter()
        .enumerate()
        {
            let mut neg = laplacian(&grid, v)?;
            neg.values_mut().iter_mut().for_each(|x| *x = -*x);
            let lhs = inner_product(&grid, space, &neg, w)?;
            let rhs = inner_product(&grid, sx, &diff_backward(&grid, v, Axis::X)?, &diff_backward(&grid, w, Axis::X)?)?
                + inner_product(&grid, sy, &diff_backward(&grid, v, Axis::Y)?, &diff_backward(&grid, w, Axis::Y)?)?;
            worst[2 + k] = worst[2 + k].max(rel(lhs, rhs));
        }
    }
    let names = [
        "(δ⁺x p, v1) = -(p, δ⁻x v1)",
        "(δ⁺y p, v2) = -(p, δ⁻y v2)",
        "(-Δ v1, w1) = (δ⁻x v1, δ⁻x w1) + (δ⁻y v1, δ⁻y w1)",
        "(-Δ v2, w2) = (δ⁻x v2, δ⁻x w2) + (δ⁻y v2, δ⁻y w2)",
    ];
    Ok(names
        .iter()
        .zip(worst)
        .map(|(name, w)| Check::new(format!("Green {name} (N={n})"), w, 1e-12))
        .collect())
}

/// Symmetry and definiteness of the Schur operator on random pressures.
pub fn schur_properties(n: usize, samples: usize) -> Result<[Check; 2]> {
    let grid = StaggeredGrid::new(n, [-2.0, -2.0], [4.0, 4.0])?;
    let sys = AugmentedSystem::new(
        &grid,
        &Field::zeros(&grid, GridFamily::VEdge),
        &Field::zeros(&grid, GridFamily::HEdge),
        &Field::zeros(&grid, GridFamily::CellCenter),
        None,
    )?;
    let mut r = rng(17);
    let mut asym: f64 = 0.0;
    let mut min_ratio = f64::INFINITY;
    let dot = |a: &Field, b: &Field| a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>();
    for _ in 0..samples {
        let x = Field::from_interior(&grid, GridFamily::CellCenter, |_, _| r.gen_range(-1.0..1.0));
        let y = Field::from_interior(&grid, GridFamily::CellCenter, |_, _| r.gen_range(-1.0..1.0));
        let (ax, ay) = (schur_apply(&x, &sys)?, schur_apply(&y, &sys)?);
        let (xay, yax) = (dot(&x, &ay), dot(&y, &ax));
        asym = asym.max((xay - yax).abs() / xay.abs().max(yax.abs()));
        min_ratio = min_ratio.min(dot(&x, &ax) / dot(&x, &x));
    }
    Ok([
        Check::new(format!("Schur operator symmetric (N={n})"), asym, 1e-11),
        // reported as the negated smallest Rayleigh quotient: must stay below 0
        Check::new(format!("Schur operator positive definite (N={n})"), -min_ratio, 0.0),
    ])
}

/// Largest deviation of solved jumps from differences of the exact jets and
/// the largest back-substitution residual, over `samples` curve points.
pub fn jump_accuracy(problem: &ProblemSpec, samples: usize) -> Result<(f64, f64)> {
    let exact = problem.exact.as_ref().ok_or_else(|| {
        crate::error::Error::InvalidProblem(format!("{} has no exact solution", problem.name))
    })?;
    let curve = problem.curve.as_ref();
    let (mut dev, mut res): (f64, f64) = (0.0, 0.0);
    for k in 0..samples {
        let s = curve.length() * (k as f64 + 0.5) / samples as f64;
        let x = curve.point(s);
        let set = jumps_at(curve, &InterfaceSample::of(problem.interface.as_ref(), s), s)?;
        let (a, b) = (exact.jets(Side::Plus, x), exact.jets(Side::Minus, x));
        let d = |c: usize, f: fn(&crate::problems::Jet) -> f64| f(&a[c]) - f(&b[c]);
        let expect_first = [d(0, |j| j.x), d(0, |j| j.y), d(1, |j| j.x), d(1, |j| j.y), d(2, |j| j.v)];
        let expect_second = [
            d(0, |j| j.xx),
            d(0, |j| j.xy),
            d(0, |j| j.yy),
            d(1, |j| j.xx),
            d(1, |j| j.xy),
            d(1, |j| j.yy),
            d(2, |j| j.x),
            d(2, |j| j.y),
        ];
        for (g, e) in set.first.to_array().iter().zip(expect_first) {
            dev = dev.max((g - e).abs());
        }
        for (g, e) in set.second.to_array().iter().zip(expect_second) {
            dev = dev.max((g - e).abs());
        }
        res = res.max(set.residuals[0]).max(set.residuals[1]);
    }
    Ok((dev, res))
}

/// With no jumps the corrected scheme must coincide bit for bit with plain MAC.
pub fn degeneration(n: usize) -> Result<Check> {
    let spec = smooth();
    let on = solve_problem(&spec, n, &SolveOptions::default())?;
    let off = solve_problem(
        &spec,
        n,
        &SolveOptions {
            corrections: false,
            ..SolveOptions::default()
        },
    )?;
    let bits = |f: &Field| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let differing = [
        (&on.fields.u1, &off.fields.u1),
        (&on.fields.u2, &off.fields.u2),
        (&on.fields.p, &off.fields.p),
    ]
    .iter()
    .map(|(a, b)| bits(a).iter().zip(bits(b)).filter(|(x, y)| *x != y).count())
    .sum::<usize>();
    Ok(Check::new(
        format!("jump-free problem matches plain MAC bitwise (N={n}, differing entries)"),
        differing as f64,
        0.0,
    ))
}

/// `λ` against the mean of the discrete pressure after a solve.
pub fn multiplier_is_mean(problem: &ProblemSpec, n: usize) -> Result<Check> {
    let sol = solve_problem(problem, n, &SolveOptions::default())?;
    let p = sol.fields.p.values();
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    Ok(Check::new(
        format!("λ = mean(p) after solving {} (N={n})", problem.name),
        (sol.fields.lambda - mean).abs(),
        1e-12,
    ))
}

/// Runs the whole suite.
pub fn run_all() -> Result<Vec<Check>> {
    let mut out = vec![poisson_vs_dense(8, 20)?];
    for n in [4, 8] {
        out.extend(green_identities(n, 10)?);
    }
    out.extend(schur_properties(8, 50)?);
    for spec in [example1(), example2()] {
        let d = validate(&spec)?;
        out.push(Check::new(format!("{} exact solution identities", spec.name), d.max_identity(), 1e-10));
        let (dev, res) = jump_accuracy(&spec, 64)?;
        out.push(Check::new(format!("{} solved jumps vs exact", spec.name), dev, 1e-8));
        out.push(Check::new(format!("{} jump back-substitution residual", spec.name), res, 1e-10));
        out.push(multiplier_is_mean(&spec, 32)?);
    }
    out.push(degeneration(32)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in run_all().unwrap() {
            assert!(c.passed(), "{c}");
        }
    }

    #[test]
    fn display_marks_failures() {
        let c = Check::new("x", 2.0, 1.0);
        assert!(c.to_string().starts_with("FAIL"));
    }
}
