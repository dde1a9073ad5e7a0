//! Convergence studies, error norms, report formatting and field dumps.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{classify_nodes, NodeClass};
use crate::grid::{apply_ghost_closure, laplacian, norms, Field, GridFamily, StaggeredGrid};
use crate::par;
use crate::problems::ProblemSpec;
use crate::solver::{corrected_rhs, solve_problem, CgOptions, SolveOptions, StokesFields};

/// Formats like C's `%.6e`: six fraction digits and an exponent of at least
/// two digits with explicit sign.
pub fn fmt_e(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.6e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}

/// Scaled errors of one solve, each relative to the same norm of the exact
/// solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScaledErrors {
    pub eu_l2: f64,
    pub ep_l2: f64,
    pub eu_h1: f64,
    pub eu_max: f64,
    pub eu_gradmax: f64,
}

impl ScaledErrors {
    pub const COLUMNS: [&'static str; 5] = ["eu_l2", "ep_l2", "eu_h1", "eu_max", "eu_gradmax"];

    pub fn to_array(self) -> [f64; 5] {
        [self.eu_l2, self.ep_l2, self.eu_h1, self.eu_max, self.eu_gradmax]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        ScaledErrors {
            eu_l2: v[0],
            ep_l2: v[1],
            eu_h1: v[2],
            eu_max: v[3],
            eu_gradmax: v[4],
        }
    }
}

fn zero_mean(p: &Field) -> Field {
    let mean = p.values().iter().sum::<f64>() / p.values().len() as f64;
    let mut out = p.clone();
    out.values_mut().iter_mut().for_each(|v| *v -= mean);
    out
}

/// Exact velocity and pressure sampled pointwise on `grid`. Velocity ghosts
/// follow the same closure as the discrete solution.
pub fn sample_exact(problem: &ProblemSpec, grid: &StaggeredGrid) -> Result<StokesFields> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::InvalidProblem(format!("{} has no exact solution", problem.name)))?;
    let value = |fam: GridFamily, c: usize| {
        Field::from_interior(grid, fam, |i, j| {
            let x = fam.position(grid, i, j);
            exact.jets(problem.side(x), x)[c].v
        })
    };
    let b = problem.boundary.clone();
    let t1 = move |x: [f64; 2]| b(x)[0];
    let b = problem.boundary.clone();
    let t2 = move |x: [f64; 2]| b(x)[1];
    let p = value(GridFamily::CellCenter, 2);
    Ok(StokesFields {
        u1: apply_ghost_closure(grid, value(GridFamily::VEdge, 0), Some(&t1))?,
        u2: apply_ghost_closure(grid, value(GridFamily::HEdge, 1), Some(&t2))?,
        lambda: p.values().iter().sum::<f64>() / p.values().len() as f64,
        p,
    })
}

/// Scaled errors of `fields` against the exact solution of `problem`.
/// Pressures are compared after shifting both to zero mean.
pub fn compute_errors(problem: &ProblemSpec, grid: &StaggeredGrid, fields: &StokesFields) -> Result<ScaledErrors> {
    let ex = sample_exact(problem, grid)?;
    let diff_interior = |a: &Field, b: &Field| {
        Field::from_interior(grid, a.family(), |i, j| a.get(i, j) - b.get(i, j))
    };
    // both fields carry the same trace, so the error ghosts mirror the error
    let e1 = apply_ghost_closure(grid, diff_interior(&fields.u1, &ex.u1), None)?;
    let e2 = apply_ghost_closure(grid, diff_interior(&fields.u2, &ex.u2), None)?;
    let pe = zero_mean(&ex.p);
    let ph = zero_mean(&fields.p);
    let ep = diff_interior(&ph, &pe);
    let e = norms(grid, &e1, &e2, &ep)?;
    let r = norms(grid, &ex.u1, &ex.u2, &pe)?;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { a };
    Ok(ScaledErrors {
        eu_l2: ratio(e.l2_u, r.l2_u),
        ep_l2: ratio(e.l2_p, r.l2_p),
        eu_h1: ratio(e.h1_semi_u, r.h1_semi_u),
        eu_max: ratio(e.max_u, r.max_u),
        eu_gradmax: ratio(e.max_grad_u, r.max_grad_u),
    })
}

/// One refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub n: usize,
    pub errors: ScaledErrors,
    pub cg_iters: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceReport {
    pub problem: String,
    pub levels: Vec<LevelResult>,
}

/// `log₂(e_coarse / e_fine)`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

impl ConvergenceReport {
    /// Orders per level and column; defined only against a preceding level
    /// with half the resolution.
    pub fn orders(&self) -> Vec<[Option<f64>; 5]> {
        let mut out = vec![[None; 5]; self.levels.len()];
        for k in 1..self.levels.len() {
            let (a, b) = (&self.levels[k - 1], &self.levels[k]);
            if b.n == 2 * a.n {
                let (ea, eb) = (a.errors.to_array(), b.errors.to_array());
                for c in 0..5 {
                    out[k][c] = Some(observed_order(ea[c], eb[c]));
                }
            }
        }
        out
    }

    pub fn level(&self, n: usize) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.n == n)
    }
}

pub const CSV_HEADER: &str =
    "N,eu_l2,order,ep_l2,order,eu_h1,order,eu_max,order,eu_gradmax,order,cg_iters,seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Csv,
}

/// Renders a report as CSV or as an aligned text table.
pub fn emit(report: &ConvergenceReport, format: Format) -> String {
    match format {
        Format::Csv => emit_csv(report, true),
        Format::Table => emit_table(report),
    }
}

/// CSV text; with `with_seconds = false` the timing column is left empty so
/// that repeated runs compare byte for byte.
pub fn emit_csv(report: &ConvergenceReport, with_seconds: bool) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for (lvl, ord) in report.levels.iter().zip(report.orders()) {
        let _ = write!(s, "{}", lvl.n);
        for (e, o) in lvl.errors.to_array().iter().zip(ord) {
            let _ = write!(s, ",{},{}", fmt_e(*e), o.map(fmt_e).unwrap_or_default());
        }
        let secs = if with_seconds { fmt_e(lvl.seconds) } else { String::new() };
        let _ = writeln!(s, ",{},{}", lvl.cg_iters, secs);
    }
    s
}

fn emit_table(report: &ConvergenceReport) -> String {
    let mut s = String::new();
    if !report.problem.is_empty() {
        let _ = writeln!(s, "problem: {}", report.problem);
    }
    let _ = writeln!(
        s,
        "{:>11} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5} | {:>9} {:>5} | {:>5} {:>8}",
        "grid", "‖e_u‖", "ord", "‖e_p‖", "ord", "|e_u|_1", "ord", "‖e_u‖∞", "ord", "|e_u|1,∞", "ord", "cg", "sec"
    );
    for (lvl, ord) in report.levels.iter().zip(report.orders()) {
        let _ = write!(s, "{:>11}", format!("{0} x {0}", lvl.n));
        for (e, o) in lvl.errors.to_array().iter().zip(ord) {
            let o = o.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
            let _ = write!(s, " | {e:>9.2e} {o:>5}");
        }
        let _ = writeln!(s, " | {:>5} {:>8.2}", lvl.cg_iters, lvl.seconds);
    }
    s
}

/// Parses CSV produced by [`emit_csv`]. Order columns are recomputed from
/// the levels, so they are checked for presence but not stored.
pub fn parse_csv(text: &str) -> Result<ConvergenceReport> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == CSV_HEADER => {}
        _ => return Err(Error::Parse("CSV header mismatch".into())),
    }
    let mut levels = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 13 {
            return Err(Error::Parse(format!("row {}: expected 13 columns, got {}", k + 1, cols.len())));
        }
        let num = |c: usize| -> Result<f64> {
            cols[c]
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number '{}'", k + 1, cols[c])))
        };
        let n: usize = cols[0]
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad N '{}'", k + 1, cols[0])))?;
        let mut e = [0.0; 5];
        for (c, slot) in e.iter_mut().enumerate() {
            *slot = num(1 + 2 * c)?;
        }
        let cg_iters = cols[11]
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: bad iteration count '{}'", k + 1, cols[11])))?;
        let seconds = if cols[12].is_empty() { 0.0 } else { num(12)? };
        levels.push(LevelResult {
            n,
            errors: ScaledErrors::from_array(e),
            cg_iters,
            seconds,
        });
    }
    Ok(ConvergenceReport {
        problem: String::new(),
        levels,
    })
}

/// Options of [`run_study`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyOptions {
    pub solve: SolveOptions,
    /// Solve the levels concurrently (results stay in level order).
    pub parallel_levels: bool,
}

impl StudyOptions {
    pub fn with_tol(mut self, tol: Option<f64>) -> Self {
        self.solve.cg = CgOptions { tol, ..self.solve.cg };
        self
    }
}

/// A study that stopped at a failing level.
#[derive(Debug, thiserror::Error)]
#[error("study of {} aborted at N={n}: {source}", partial.problem)]
pub struct StudyError {
    pub n: usize,
    /// Levels completed before the failure.
    pub partial: ConvergenceReport,
    #[source]
    pub source: Error,
}

fn run_level(problem: &ProblemSpec, n: usize, opts: &SolveOptions) -> Result<LevelResult> {
    let start = Instant::now();
    let sol = solve_problem(problem, n, opts)?;
    let errors = compute_errors(problem, &sol.grid, &sol.fields)?;
    Ok(LevelResult {
        n,
        errors,
        cg_iters: sol.stats.iterations,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Solves `problem` on every level and tabulates scaled errors.
pub fn run_study(problem: &ProblemSpec, levels: &[usize], opts: &StudyOptions) -> Result<ConvergenceReport, StudyError> {
    let mut report = ConvergenceReport {
        problem: problem.name.clone(),
        levels: Vec::new(),
    };
    let results: Vec<Result<LevelResult>> = if opts.parallel_levels {
        let mut per_level = opts.solve.clone();
        per_level.cg.threads = 1;
        par::map(levels, levels.len().max(1), |n| run_level(problem, *n, &per_level))
    } else {
        let mut out = Vec::new();
        for n in levels {
            let r = run_level(problem, *n, &opts.solve);
            let failed = r.is_err();
            out.push(r);
            if failed {
                break;
            }
        }
        out
    };
    for (n, r) in levels.iter().zip(results) {
        match r {
            Ok(l) => report.levels.push(l),
            Err(source) => {
                return Err(StudyError {
                    n: *n,
                    partial: report,
                    source,
                })
            }
        }
    }
    Ok(report)
}

/// Parses `"128,256,512"` into grid sizes.
pub fn parse_levels(s: &str) -> Result<Vec<usize>> {
    let levels: Vec<usize> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad level '{t}'")))
        })
        .collect::<Result<_>>()?;
    if levels.is_empty() {
        return Err(Error::Parse("no levels given".into()));
    }
    Ok(levels)
}

// field dumps

/// One block of a field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBlock {
    pub name: String,
    pub origin: [f64; 2],
    pub h: f64,
    pub field: Field,
}

fn write_block(out: &mut String, name: &str, grid: &StaggeredGrid, field: &Field) {
    let (nx, ny) = field.shape();
    let o = grid.origin();
    let _ = writeln!(
        out,
        "field {name} family {} N {} origin {:?} {:?} h {:?} shape {nx} {ny}",
        field.family().name(),
        field.n(),
        o[0],
        o[1],
        grid.h()
    );
    for row in field.values().chunks(nx) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

/// Text form of the discrete fields: one header line per block followed by
/// its rows (`i` fastest, ghost rows included), then the multiplier.
pub fn format_fields(grid: &StaggeredGrid, fields: &StokesFields) -> String {
    let mut s = String::from("# stokes-mac field dump\n");
    write_block(&mut s, "u1", grid, &fields.u1);
    write_block(&mut s, "u2", grid, &fields.u2);
    write_block(&mut s, "p", grid, &fields.p);
    let _ = writeln!(s, "lambda {:?}", fields.lambda);
    s
}

pub fn dump_fields(grid: &StaggeredGrid, fields: &StokesFields, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_fields(grid, fields)).map_err(|e| Error::io(path, e))
}

/// Parses the output of [`format_fields`].
pub fn parse_fields(text: &str) -> Result<(Vec<FieldBlock>, Option<f64>)> {
    let bad = |m: String| Error::Parse(format!("field dump: {m}"));
    let mut blocks = Vec::new();
    let mut lambda = None;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    while let Some(line) = lines.next() {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.first() == Some(&"lambda") && t.len() == 2 {
            lambda = Some(t[1].parse().map_err(|_| bad(format!("bad lambda '{}'", t[1])))?);
            continue;
        }
        let shape_ok = t.len() == 14
            && t[0] == "field"
            && t[2] == "family"
            && t[4] == "N"
            && t[6] == "origin"
            && t[9] == "h"
            && t[11] == "shape";
        if !shape_ok {
            return Err(bad(format!("unexpected line '{line}'")));
        }
        let f = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number '{s}'")));
        let u = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer '{s}'")));
        let family = GridFamily::from_name(t[3]).ok_or_else(|| bad(format!("unknown family '{}'", t[3])))?;
        let n = u(t[5])?;
        let (nx, ny) = (u(t[12])?, u(t[13])?);
        let mut values = Vec::with_capacity(nx * ny);
        for r in 0..ny {
            let row = lines.next().ok_or_else(|| bad(format!("block {} ends at row {r}", t[1])))?;
            let before = values.len();
            for v in row.split_whitespace() {
                values.push(f(v)?);
            }
            if values.len() - before != nx {
                return Err(bad(format!("block {} row {r} has the wrong length", t[1])));
            }
        }
        blocks.push(FieldBlock {
            name: t[1].to_string(),
            origin: [f(t[7])?, f(t[8])?],
            h: f(t[10])?,
            field: Field::from_storage(family, n, values, true)?,
        });
    }
    Ok((blocks, lambda))
}

pub fn read_fields(path: impl AsRef<Path>) -> Result<(Vec<FieldBlock>, Option<f64>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fields(&text)
}

// truncation study

/// Max-norm residuals of the exact solution in the corrected scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLevel {
    pub n: usize,
    /// Momentum rows whose stencil is not cut, boundary-adjacent rows excluded.
    pub regular_momentum: f64,
    /// Momentum rows with a cut stencil.
    pub irregular_momentum: f64,
    /// All divergence rows.
    pub divergence: f64,
}

/// Plugs the sampled exact solution into the corrected discrete equations.
pub fn truncation_residuals(problem: &ProblemSpec, n: usize) -> Result<TruncationLevel> {
    let grid = problem.grid(n)?;
    let (rhs, _) = corrected_rhs(problem, &grid, &SolveOptions::default())?;
    let ex = sample_exact(problem, &grid)?;
    let h = grid.h();
    let mut regular: f64 = 0.0;
    let mut irregular: f64 = 0.0;
    for (u, f, fam) in [
        (&ex.u1, &rhs.f1, GridFamily::VEdge),
        (&ex.u2, &rhs.f2, GridFamily::HEdge),
    ] {
        let lap = laplacian(&grid, u)?;
        let classes = classify_nodes(&grid, problem.curve.as_ref(), fam)?;
        for (i, j) in lap.interior_indices() {
            let gp = if fam == GridFamily::VEdge {
                (ex.p.get(i + 1, j) - ex.p.get(i, j)) / h
            } else {
                (ex.p.get(i, j + 1) - ex.p.get(i, j)) / h
            };
            let r = (-problem.mu * lap.get(i, j) + gp - f.get(i, j)).abs();
            if classes.get(i, j) == NodeClass::Irregular {
                irregular = irregular.max(r);
            } else {
                let (lo, hi) = (1, n - 1);
                let edge = i <= lo || j <= lo || i >= hi || j >= hi;
                if !edge {
                    regular = regular.max(r);
                }
            }
        }
    }
    let mut divergence: f64 = 0.0;
    for j in 1..=n {
        for i in 1..=n {
            let d = (ex.u1.get(i, j) - ex.u1.get(i - 1, j) + ex.u2.get(i, j) - ex.u2.get(i, j - 1)) / h;
            divergence = divergence.max((d - rhs.g.get(i, j)).abs());
        }
    }
    Ok(TruncationLevel {
        n,
        regular_momentum: regular,
        irregular_momentum: irregular,
        divergence,
    })
}
