use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use stokes_mac::harness::{self, Format, StudyOptions};
use stokes_mac::jumps::{jumps_at, InterfaceSample};
use stokes_mac::problems;
use stokes_mac::solver::{discretize_interface, solve_problem, CgOptions, SolveOptions};
use stokes_mac::verify;
use stokes_mac::Error;

#[derive(Parser)]
#[command(name = "stokes-mac", version, about = "MAC solver for Stokes interface problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Table,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Grid-refinement study with scaled errors and observed orders
    Study {
        /// Built-in name (example1, example2, smooth) or config file path
        #[arg(long, default_value = "example1")]
        problem: String,
        #[arg(long, default_value = "128,256,512")]
        levels: String,
        /// Relative CG tolerance (default max(1e-11, 1e-2 h^4))
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "table")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve all levels at once
        #[arg(long)]
        parallel_levels: bool,
    },
    /// Single solve; prints solver statistics and errors when known
    Solve {
        #[arg(long, default_value = "example1")]
        problem: String,
        #[arg(short, long, default_value_t = 128)]
        n: usize,
        #[arg(long)]
        tol: Option<f64>,
        /// Write the discrete fields to this file
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Skip the interface corrections (plain MAC)
        #[arg(long)]
        no_corrections: bool,
    },
    /// Run the built-in property suite
    Verify,
    /// Tabulate interface jumps along the curve
    Jumps {
        #[arg(long, default_value = "example1")]
        problem: String,
        /// Evenly spaced arclength samples
        #[arg(long, default_value_t = 32)]
        samples: usize,
        /// Use the crossings of an N x N grid instead of even samples
        #[arg(short, long)]
        n: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cmd {
        Command::Study {
            problem,
            levels,
            tol,
            format,
            out,
            parallel_levels,
        } => {
            let spec = problems::load(&problem)?;
            let levels = harness::parse_levels(&levels)?;
            let opts = StudyOptions {
                parallel_levels,
                ..StudyOptions::default()
            }
            .with_tol(tol);
            let fmt = match format {
                OutFormat::Table => Format::Table,
                OutFormat::Csv => Format::Csv,
            };
            let (report, failure) = match harness::run_study(&spec, &levels, &opts) {
                Ok(r) => (r, None),
                Err(e) => (e.partial.clone(), Some(e)),
            };
            let text = harness::emit(&report, fmt);
            match &out {
                Some(path) => std::fs::write(path, &text).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?,
                None => print!("{text}"),
            }
            if let Some(e) = failure {
                eprintln!("error: {e}");
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve {
            problem,
            n,
            tol,
            dump,
            no_corrections,
        } => {
            let spec = problems::load(&problem)?;
            let opts = SolveOptions {
                cg: CgOptions {
                    tol,
                    ..CgOptions::default()
                },
                corrections: !no_corrections,
                provenance: false,
            };
            let sol = solve_problem(&spec, n, &opts)?;
            let st = &sol.stats;
            println!("problem            {}", spec.name);
            println!("grid               {n} x {n} (h = {})", sol.grid.h());
            println!("crossings          {}", sol.crossings);
            println!("corrected entries  {}", sol.corrections.len());
            println!("cg iterations      {} (tol {:.1e})", st.iterations, st.tolerance);
            println!("divergence resid.  {:.3e}", st.divergence_residual);
            println!("momentum resid.    {:.3e}", st.momentum_residual);
            println!("compatibility      {:.3e}", st.compatibility_defect);
            println!("lambda             {:.6e}", sol.fields.lambda);
            println!("seconds            {:.3}", st.seconds);
            if spec.exact.is_some() {
                let e = harness::compute_errors(&spec, &sol.grid, &sol.fields)?;
                for (name, v) in harness::ScaledErrors::COLUMNS.iter().zip(e.to_array()) {
                    println!("{name:<18} {}", harness::fmt_e(v));
                }
            }
            if let Some(path) = dump {
                harness::dump_fields(&sol.grid, &sol.fields, &path)?;
                println!("fields written to  {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let checks = verify::run_all()?;
            let failed = checks.iter().filter(|c| !c.passed()).count();
            for c in &checks {
                println!("{c}");
            }
            println!("{} checks, {failed} failed", checks.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Jumps { problem, samples, n } => {
            let spec = problems::load(&problem)?;
            println!(
                "s,x,y,u1x,u1y,u2x,u2y,p,u1xx,u1xy,u1yy,u2xx,u2xy,u2yy,px,py,res1,res2"
            );
            let sets = match n {
                Some(n) => discretize_interface(&spec, &spec.grid(n)?)?.jumps,
                None => (0..samples)
                    .map(|k| {
                        let s = spec.curve.length() * k as f64 / samples as f64;
                        jumps_at(spec.curve.as_ref(), &InterfaceSample::of(spec.interface.as_ref(), s), s)
                    })
                    .collect::<Result<_, _>>()?,
            };
            for set in sets {
                let x = spec.curve.point(set.s);
                let mut row = vec![set.s, x[0], x[1]];
                row.extend(set.first.to_array());
                row.extend(set.second.to_array());
                row.extend(set.residuals);
                let cols: Vec<String> = row.iter().map(|v| harness::fmt_e(*v)).collect();
                println!("{}", cols.join(","));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
