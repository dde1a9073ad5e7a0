use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use stokes_mac_ffi::*;

fn last_error() -> String {
    let p = sm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn builtin(name: &str) -> *mut SmProblem {
    let name = CString::new(name).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sm_problem_builtin(name.as_ptr(), &mut p) }, SmStatus::SmOk);
    p
}

#[test]
fn solve_and_read_back() {
    let problem = builtin("example1");
    let mut sol = ptr::null_mut();
    let st = unsafe { sm_solve(problem, 32, 0.0, 1, &mut sol) };
    assert_eq!(st, SmStatus::SmOk);

    let (mut n, mut h, mut iters, mut lambda) = (0usize, 0.0f64, 0usize, 0.0f64);
    assert_eq!(unsafe { sm_solution_info(sol, &mut n, &mut h, &mut iters, &mut lambda) }, SmStatus::SmOk);
    assert_eq!(n, 32);
    assert_eq!(h, 0.125);
    assert!(iters > 0);

    // the multiplier equals the mean of the copied pressure
    let (mut nx, mut ny) = (0usize, 0usize);
    assert_eq!(unsafe { sm_solution_field_shape(sol, SmField::SmP as i32, &mut nx, &mut ny) }, SmStatus::SmOk);
    assert_eq!((nx, ny), (32, 32));
    let mut p = vec![0.0; nx * ny];
    assert_eq!(unsafe { sm_solution_copy_field(sol, SmField::SmP as i32, p.as_mut_ptr(), p.len()) }, SmStatus::SmOk);
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    assert!((mean - lambda).abs() < 1e-12);

    assert_eq!(unsafe { sm_solution_field_shape(sol, SmField::SmU1 as i32, &mut nx, &mut ny) }, SmStatus::SmOk);
    assert_eq!((nx, ny), (33, 34));

    let mut e = SmErrors::default();
    assert_eq!(unsafe { sm_solution_errors(problem, sol, &mut e) }, SmStatus::SmOk);
    assert!(e.velocity_max > 0.0 && e.velocity_max < 1e-2, "{e:?}");

    unsafe {
        sm_solution_free(sol);
        sm_problem_free(problem);
    }
}

#[test]
fn errors_are_reported() {
    let mut p = ptr::null_mut();
    let bogus = CString::new("no-such-problem").unwrap();
    let st = unsafe { sm_problem_builtin(bogus.as_ptr(), &mut p) };
    assert_ne!(st, SmStatus::SmOk);
    assert!(p.is_null());
    assert!(last_error().contains("no-such-problem"));

    assert_eq!(unsafe { sm_problem_builtin(ptr::null(), &mut p) }, SmStatus::SmNullPointer);
    assert_eq!(unsafe { sm_problem_builtin(bogus.as_ptr(), ptr::null_mut()) }, SmStatus::SmNullPointer);

    let bad = CString::new("curve = circle 0 0 1\nfoo = 1").unwrap();
    assert_eq!(unsafe { sm_problem_from_config(bad.as_ptr(), &mut p) }, SmStatus::SmInvalidArgument);

    let missing = CString::new("/nonexistent/problem.cfg").unwrap();
    assert_eq!(unsafe { sm_problem_from_file(missing.as_ptr(), &mut p) }, SmStatus::SmIo);

    let problem = builtin("example1");
    let mut sol = ptr::null_mut();
    // too coarse to resolve the circle
    assert_ne!(unsafe { sm_solve(problem, 2, 0.0, 1, &mut sol) }, SmStatus::SmOk);
    assert!(sol.is_null());
    assert_eq!(unsafe { sm_solve(problem, 16, f64::NAN, 1, &mut sol) }, SmStatus::SmInvalidArgument);

    assert_eq!(unsafe { sm_solve(problem, 16, 0.0, 1, &mut sol) }, SmStatus::SmOk);
    let mut small = [0.0; 4];
    assert_eq!(
        unsafe { sm_solution_copy_field(sol, SmField::SmU2 as i32, small.as_mut_ptr(), small.len()) },
        SmStatus::SmBufferTooSmall
    );
    let (mut nx, mut ny) = (0usize, 0usize);
    assert_eq!(unsafe { sm_solution_field_shape(sol, 7, &mut nx, &mut ny) }, SmStatus::SmInvalidArgument);
    unsafe {
        sm_solution_free(sol);
        sm_problem_free(problem);
        sm_problem_free(ptr::null_mut());
        sm_solution_free(ptr::null_mut());
    }
}

#[test]
fn data_problem_has_no_errors() {
    let text = CString::new(
        "domain.origin = 0 0\ndomain.length = 1\ncurve = circle 0.5 0.5 0.25\n\
         f1.in = 1\nf1.out = 0\nf2.in = 0\nf2.out = 0\npsi1 = 0\npsi2 = 0\nub1 = 0\nub2 = 0\n",
    )
    .unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { sm_problem_from_config(text.as_ptr(), &mut p) }, SmStatus::SmOk);
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { sm_solve(p, 32, 0.0, 1, &mut sol) }, SmStatus::SmOk);
    let mut e = SmErrors::default();
    assert_eq!(unsafe { sm_solution_errors(p, sol, &mut e) }, SmStatus::SmNoExactSolution);
    unsafe {
        sm_solution_free(sol);
        sm_problem_free(p);
    }
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/stokes_mac.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    for compiler in ["cc", "c++"] {
        let lang = if compiler == "cc" { "c" } else { "c++" };
        let out = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include/stokes_mac.h"))
            .output()
            .expect("a C compiler is required to check the header");
        assert!(out.status.success(), "{compiler}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
