//! End-to-end runs of the `stokes-mac` binary.

use std::process::Command;

use stokes_mac::harness::{parse_csv, read_fields};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stokes-mac"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn study_csv_has_orders() {
    let (code, out, err) = run(&["study", "--problem", "example1", "--levels", "32,64", "--format", "csv"]);
    assert_eq!(code, 0, "{err}");
    let report = parse_csv(&out).unwrap();
    assert_eq!(report.levels.len(), 2);
    let orders = report.orders();
    let q = orders[1][3].unwrap();
    assert!((1.5..2.5).contains(&q), "max-norm order {q}");
}

#[test]
fn solve_prints_errors_and_dumps_fields() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("fields.txt");
    let (code, out, err) = run(&["solve", "--problem", "example2", "-n", "32", "--dump", dump.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("cg iterations"));
    assert!(out.contains("eu_max"));
    let (blocks, lambda) = read_fields(&dump).unwrap();
    let names: Vec<&str> = blocks.iter().map(|b| b.name.as_str()).collect();
    assert_eq!(names, ["u1", "u2", "p"]);
    let p = &blocks[2].field;
    let mean = p.values().iter().sum::<f64>() / p.values().len() as f64;
    assert!((mean - lambda.unwrap()).abs() < 1e-12);
}

#[test]
fn config_file_matches_builtin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("circle.cfg");
    std::fs::write(
        &path,
        "name = circle\ndomain.origin = -2 -2\ndomain.length = 4\ncurve = circle 0 0 1\n\
         u1.in = y/4*(x^2+y^2)\nu1.out = y/sqrt(x^2+y^2) - y + y/4\n\
         u2.in = -x*y^2/4\nu2.out = -x/sqrt(x^2+y^2) + x - x/4*(1-x^2)\n\
         p.in = 5\np.out = (-3/4*x^3 + 3/8*x)*y\n",
    )
    .unwrap();
    let (c1, a, e1) = run(&["study", "--problem", path.to_str().unwrap(), "--levels", "32", "--format", "csv"]);
    let (c2, b, e2) = run(&["study", "--problem", "example1", "--levels", "32", "--format", "csv"]);
    assert_eq!((c1, c2), (0, 0), "{e1}{e2}");
    let (ra, rb) = (parse_csv(&a).unwrap(), parse_csv(&b).unwrap());
    let (x, y) = (ra.levels[0].errors.to_array(), rb.levels[0].errors.to_array());
    for (p, q) in x.iter().zip(y) {
        assert!((p - q).abs() <= 1e-6 * q, "{p} vs {q}");
    }
}

#[test]
fn jumps_table() {
    let (code, out, _) = run(&["jumps", "--problem", "example1", "--samples", "8"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 9);
    // at s = 0 the point is (1, 0) and the pressure jump is 5
    let first: Vec<f64> = lines[1].split(',').map(|t| t.parse().unwrap()).collect();
    assert!((first[1] - 1.0).abs() < 1e-12 && first[2].abs() < 1e-12);
    assert!((first[7] - 5.0).abs() < 1e-10);
}

#[test]
fn verify_passes() {
    let (code, out, _) = run(&["verify"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().all(|l| !l.starts_with("FAIL")));
}

#[test]
fn bad_input_exits_with_two() {
    let (code, _, err) = run(&["solve", "--problem", "nonsense", "-n", "16"]);
    assert_eq!(code, 2);
    assert!(err.contains("nonsense"));
    let (code, _, _) = run(&["study", "--levels", "32,abc"]);
    assert_eq!(code, 2);
}
