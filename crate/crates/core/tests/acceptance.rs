//! Acceptance run: one PASS/FAIL line per criterion, detail lines for every
//! sub-comparison underneath. Exits non-zero if any criterion fails.
//!
//! Oracles used here are independent of the library paths they check: a dense
//! Gaussian elimination on a matrix assembled from the field Laplacian,
//! symbolic differentiation of the exact solutions, and least-squares slopes.

use std::process::ExitCode;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stokes_mac::grid::{apply_ghost_closure, laplacian, Field, GridFamily, StaggeredGrid};
use stokes_mac::harness::{observed_order, run_study, truncation_residuals, ConvergenceReport, StudyOptions};
use stokes_mac::jumps::{jumps_at, InterfaceSample};
use stokes_mac::problems::config::{self, ExprSolution};
use stokes_mac::problems::{example1, example2, smooth, Jet, ProblemSpec};
use stokes_mac::solver::{solve_problem, Layout, PoissonSolver, SolveOptions};
use stokes_mac::verify;

/// Reference rows: N, then the five scaled columns
/// (‖e_u‖, ‖e_p‖, |e_u|₁, ‖e_u‖∞, |e_u|₁,∞).
const EX1_ROWS: [(usize, [f64; 5]); 3] = [
    (128, [3.77e-3, 5.50e-5, 1.43e-4, 1.34e-4, 1.42e-4]),
    (256, [9.57e-4, 1.39e-5, 3.60e-5, 3.38e-5, 3.51e-5]),
    // the printed gradient entry reads 8.73e-5; its own order column (2.01)
    // and the next row (2.17e-6) only fit 8.73e-6
    (512, [2.36e-4, 3.36e-6, 9.00e-6, 8.50e-6, 8.73e-6]),
];
/// Printed orders of the three ℓ² columns, rows 256 and 512.
const EX1_ORDERS: [[f64; 3]; 2] = [[1.99, 1.98, 1.99], [2.02, 2.05, 2.00]];

const EX2_ROWS: [(usize, [f64; 5]); 3] = [
    (128, [3.53e-3, 2.41e-5, 2.49e-4, 2.44e-4, 5.18e-5]),
    (256, [8.87e-4, 5.11e-6, 6.14e-5, 6.09e-5, 1.27e-5]),
    (512, [2.20e-4, 1.08e-6, 1.53e-5, 1.52e-5, 3.17e-6]),
];
const EX2_ORDERS: [[f64; 3]; 2] = [[1.99, 2.24, 2.02], [2.01, 2.24, 2.00]];

const COLUMNS: [&str; 5] = ["‖e_u‖", "‖e_p‖", "|e_u|₁", "‖e_u‖∞", "|e_u|₁,∞"];

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            details: vec![],
        }
    }

    fn check(&mut self, ok: bool, text: String) {
        self.pass &= ok;
        self.details.push(format!("{} {text}", if ok { "ok  " } else { "MISS" }));
    }
}

fn within_factor(got: f64, want: f64, factor: f64) -> bool {
    got.is_finite() && got <= want * factor && got >= want / factor
}

fn study(spec: &ProblemSpec) -> ConvergenceReport {
    match run_study(spec, &[128, 256, 512], &StudyOptions::default()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("study of {} failed: {e}", spec.name);
            e.partial
        }
    }
}

fn compare_values(out: &mut Outcome, report: &ConvergenceReport, rows: &[(usize, [f64; 5])], cols: &[usize], only_n: Option<usize>) {
    for (n, want) in rows {
        if only_n.is_some_and(|m| m != *n) {
            continue;
        }
        let Some(level) = report.level(*n) else {
            out.check(false, format!("N={n}: level missing"));
            continue;
        };
        let got = level.errors.to_array();
        for &c in cols {
            out.check(
                within_factor(got[c], want[c], 2.0),
                format!("N={n} {:<9} {:.3e} vs {:.3e} (ratio {:.2})", COLUMNS[c], got[c], want[c], got[c] / want[c]),
            );
        }
    }
}

/// Orders from consecutive rows of `report` for column `c`, at N=256 and 512.
fn orders(report: &ConvergenceReport, c: usize) -> Vec<(usize, f64)> {
    report
        .levels
        .windows(2)
        .map(|w| (w[1].n, observed_order(w[0].errors.to_array()[c], w[1].errors.to_array()[c])))
        .collect()
}

fn criterion_tables(report: &ConvergenceReport, rows: &[(usize, [f64; 5])], printed: &[[f64; 3]; 2], pressure_band: Option<(f64, f64)>) -> Outcome {
    let mut out = Outcome::new();
    compare_values(&mut out, report, rows, &[0, 1, 2], None);
    for c in 0..3 {
        for (k, (n, q)) in orders(report, c).into_iter().enumerate() {
            match (c, pressure_band) {
                (1, Some((lo, hi))) => {
                    out.check((lo..=hi).contains(&q), format!("N={n} order {:<9} {q:.2} in [{lo}, {hi}]", COLUMNS[c]))
                }
                _ => {
                    let want = printed[k][c];
                    out.check(
                        (q - want).abs() <= 0.2,
                        format!("N={n} order {:<9} {q:.2} vs printed {want:.2} ± 0.2", COLUMNS[c]),
                    )
                }
            }
        }
    }
    out
}

fn criterion_max_norms(report: &ConvergenceReport, rows: &[(usize, [f64; 5])]) -> Outcome {
    let mut out = Outcome::new();
    compare_values(&mut out, report, rows, &[3, 4], Some(256));
    for c in [3, 4] {
        for (n, q) in orders(report, c) {
            out.check((1.8..=2.3).contains(&q), format!("N={n} order {:<9} {q:.2} in [1.8, 2.3]", COLUMNS[c]));
        }
    }
    out
}

// dense oracle

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let m = a[i][k] / a[k][k];
            if m != 0.0 {
                let pivot_row = a[k].clone();
                for (x, p) in a[i][k..].iter_mut().zip(&pivot_row[k..]) {
                    *x -= m * p;
                }
                b[i] -= m * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Columns of `-Δ_h` obtained by applying the field Laplacian to unit vectors.
fn dense_neg_laplacian(grid: &StaggeredGrid, fam: GridFamily) -> Vec<Vec<f64>> {
    let lay = Layout::of(fam, grid.n());
    let mut a = vec![vec![0.0; lay.len()]; lay.len()];
    let probe = Field::zeros(grid, fam);
    let cells: Vec<(usize, usize)> = probe.interior_indices().collect();
    for &(ci, cj) in &cells {
        let unit = Field::from_interior(grid, fam, |i, j| if (i, j) == (ci, cj) { 1.0 } else { 0.0 });
        let closed = apply_ghost_closure(grid, unit, None).unwrap();
        let lap = laplacian(grid, &closed).unwrap();
        for &(i, j) in &cells {
            a[lay.at(i, j)][lay.at(ci, cj)] = -lap.get(i, j);
        }
    }
    a
}

fn criterion_poisson() -> Outcome {
    let mut out = Outcome::new();
    let grid = StaggeredGrid::new(8, [-2.0, -2.0], [4.0, 4.0]).unwrap();
    let fast = PoissonSolver::new(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for fam in [GridFamily::VEdge, GridFamily::HEdge] {
        let a = dense_neg_laplacian(&grid, fam);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let f: Vec<f64> = (0..a.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = fast.solve(fam, &f).unwrap();
            let y = gauss_solve(a.clone(), f);
            let num: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let den: f64 = y.iter().map(|q| q * q).sum::<f64>().sqrt();
            worst = worst.max(num / den);
        }
        out.check(worst <= 1e-11, format!("{} worst relative {worst:.2e} (limit 1e-11)", fam.name()));
    }
    out
}

fn criterion_green() -> Outcome {
    let mut out = Outcome::new();
    for n in [4, 8] {
        for c in verify::green_identities(n, 20).unwrap() {
            out.check(c.passed(), format!("{} worst {:.2e}", c.name, c.worst));
        }
    }
    out
}

// symbolic oracle for the jumps

const EX1_EXPR: &str = "\
domain.origin = -2 -2
domain.length = 4
curve = circle 0 0 1
u1.in  = y/4*(x^2+y^2)
u1.out = y/sqrt(x^2+y^2) - y + y/4
u2.in  = -x*y^2/4
u2.out = -x/sqrt(x^2+y^2) + x - x/4*(1-x^2)
p.in   = 5
p.out  = (-3/4*x^3 + 3/8*x)*y
";

const EX2_EXPR: &str = "\
domain.origin = -2 -2
domain.length = 4
curve = ellipse 0 0 1 0.5
u1.in  = y/4
u1.out = y*(x^2+4*y^2)/4
u2.in  = (x^3-x)/16
u2.out = -x*y^2/4
p.in   = (-3/4*x^3 + 3/8*x)*y
p.out  = 0
";

fn symbolic(text: &str) -> ExprSolution {
    // reuse the config parser only for the expressions themselves
    let mut plus = vec![];
    let mut minus = vec![];
    for line in text.lines() {
        if let Some((k, v)) = line.split_once('=') {
            let k = k.trim();
            if k.ends_with(".in") {
                plus.push(stokes_mac::problems::expr::ExprJet::parse(v.trim()).unwrap());
            } else if k.ends_with(".out") {
                minus.push(stokes_mac::problems::expr::ExprJet::parse(v.trim()).unwrap());
            }
        }
    }
    ExprSolution {
        plus: [plus[0].clone(), plus[1].clone(), plus[2].clone()],
        minus: [minus[0].clone(), minus[1].clone(), minus[2].clone()],
    }
}

fn criterion_jumps() -> Outcome {
    let mut out = Outcome::new();
    for (spec, text) in [(example1(), EX1_EXPR), (example2(), EX2_EXPR)] {
        // the text must describe the same problem the built-in solves
        assert!(config::parse(text).is_ok(), "oracle text for {} is not a valid problem", spec.name);
        let sym = symbolic(text);
        let curve = spec.curve.as_ref();
        let (mut dev, mut res): (f64, f64) = (0.0, 0.0);
        for k in 0..64 {
            let s = curve.length() * (k as f64 + 0.25) / 64.0;
            let x = curve.point(s);
            let set = jumps_at(curve, &InterfaceSample::of(spec.interface.as_ref(), s), s).unwrap();
            let a: Vec<Jet> = sym.plus.iter().map(|j| j.at(x)).collect();
            let b: Vec<Jet> = sym.minus.iter().map(|j| j.at(x)).collect();
            let d = |c: usize, f: fn(&Jet) -> f64| f(&a[c]) - f(&b[c]);
            let first = [d(0, |j| j.x), d(0, |j| j.y), d(1, |j| j.x), d(1, |j| j.y), d(2, |j| j.v)];
            let second = [
                d(0, |j| j.xx),
                d(0, |j| j.xy),
                d(0, |j| j.yy),
                d(1, |j| j.xx),
                d(1, |j| j.xy),
                d(1, |j| j.yy),
                d(2, |j| j.x),
                d(2, |j| j.y),
            ];
            for (g, e) in set.first.to_array().iter().zip(first) {
                dev = dev.max((g - e).abs());
            }
            for (g, e) in set.second.to_array().iter().zip(second) {
                dev = dev.max((g - e).abs());
            }
            res = res.max(set.residuals[0]).max(set.residuals[1]);
            // velocity itself is continuous
            dev = dev.max((a[0].v - b[0].v).abs()).max((a[1].v - b[1].v).abs());
        }
        out.check(dev <= 1e-8, format!("{} jumps vs symbolic differences: {dev:.2e} (limit 1e-8)", spec.name));
        out.check(res <= 1e-10, format!("{} back-substitution residual: {res:.2e} (limit 1e-10)", spec.name));
    }
    out
}

/// Least-squares slope of log₂ e against log₂ h.
fn fitted_order(ns: &[usize], e: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| -(n as f64).log2()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.log2()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_truncation() -> Outcome {
    let mut out = Outcome::new();
    let ns = [64, 128, 256];
    for spec in [example1(), example2()] {
        let levels: Vec<_> = ns.iter().map(|&n| truncation_residuals(&spec, n).unwrap()).collect();
        let rows: [(&str, f64, Vec<f64>); 3] = [
            ("regular momentum", 2.0, levels.iter().map(|l| l.regular_momentum).collect()),
            ("irregular momentum", 1.0, levels.iter().map(|l| l.irregular_momentum).collect()),
            ("divergence", 2.0, levels.iter().map(|l| l.divergence).collect()),
        ];
        for (name, want, e) in rows {
            let shown: Vec<String> = e.iter().map(|v| format!("{v:.2e}")).collect();
            if e.iter().all(|v| *v <= 1e-12) {
                // consistent to rounding: the scheme is exact for these fields
                out.check(true, format!("{} {name}: residuals [{}] at rounding level", spec.name, shown.join(", ")));
                continue;
            }
            let q = fitted_order(&ns, &e);
            out.check(
                (q - want).abs() <= 0.3,
                format!("{} {name}: [{}] fitted order {q:.2} vs {want} ± 0.3", spec.name, shown.join(", ")),
            );
        }
    }
    out
}

fn bits(f: &Field) -> Vec<u64> {
    f.values().iter().map(|v| v.to_bits()).collect()
}

fn criterion_degeneration() -> Outcome {
    let mut out = Outcome::new();
    let spec = smooth();
    for n in [32, 64] {
        let on = solve_problem(&spec, n, &SolveOptions::default()).unwrap();
        let off = solve_problem(
            &spec,
            n,
            &SolveOptions {
                corrections: false,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        let same = bits(&on.fields.u1) == bits(&off.fields.u1)
            && bits(&on.fields.u2) == bits(&off.fields.u2)
            && bits(&on.fields.p) == bits(&off.fields.p)
            && on.fields.lambda.to_bits() == off.fields.lambda.to_bits();
        out.check(
            same,
            format!("{} N={n}: {} crossings, corrected vs plain MAC bitwise equal: {same}", spec.name, on.crossings),
        );
    }
    out
}

fn criterion_schur() -> Outcome {
    let mut out = Outcome::new();
    for c in verify::schur_properties(8, 50).unwrap() {
        out.check(c.passed(), format!("{} worst {:.2e}", c.name, c.worst));
    }
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for spec in [example1(), example2(), smooth()] {
        for n in [16, 32, 64] {
            let sol = solve_problem(&spec, n, &SolveOptions::default()).unwrap();
            let p: Vec<f64> = Field::zeros(&sol.grid, GridFamily::CellCenter)
                .interior_indices()
                .map(|(i, j)| sol.fields.p.get(i, j))
                .collect();
            let mean = p.iter().sum::<f64>() / p.len() as f64;
            worst = worst.max((sol.fields.lambda - mean).abs());
            count += 1;
        }
    }
    out.check(worst <= 1e-12, format!("λ - mean(p) over {count} solves: {worst:.2e} (limit 1e-12)"));
    out
}

fn main() -> ExitCode {
    let ex1 = study(&example1());
    let ex2 = study(&example2());
    let ex2_tables = {
        let mut o = criterion_tables(&ex2, &EX2_ROWS, &EX2_ORDERS, Some((1.8, 2.8)));
        let m = criterion_max_norms(&ex2, &EX2_ROWS);
        o.pass &= m.pass;
        o.details.extend(m.details);
        o
    };
    let results = [
        ("1 example1 l2 and H1 errors vs reference", criterion_tables(&ex1, &EX1_ROWS, &EX1_ORDERS, None)),
        ("2 example1 max norms vs reference", criterion_max_norms(&ex1, &EX1_ROWS)),
        ("3 example2 errors vs reference", ex2_tables),
        ("4 FFT Poisson vs dense solve", criterion_poisson()),
        ("5 discrete Green identities", criterion_green()),
        ("6 jump systems", criterion_jumps()),
        ("7 truncation orders", criterion_truncation()),
        ("8 degeneration to plain MAC", criterion_degeneration()),
        ("9 Schur operator and multiplier", criterion_schur()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}", if o.pass { "PASS" } else { "FAIL" });
        for d in &o.details {
            println!("       {d}");
        }
        failed += usize::from(!o.pass);
    }
    println!("{} criteria, {failed} failed", results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
