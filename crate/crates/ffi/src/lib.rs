//! C ABI for the `stokes-mac` solver.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Every entry point returns an [`SmStatus`] and
//! never unwinds across the boundary. On failure a message is kept per
//! thread and can be read with [`sm_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stokes_mac::harness::{compute_errors, ScaledErrors};
use stokes_mac::problems::{self, config};
use stokes_mac::solver::{solve_problem, CgOptions, SolveOptions};
use stokes_mac::{Error, Field, ProblemSpec, Solution};

/// Result codes. `SM_OK` is zero; everything else is a failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmStatus {
    SmOk = 0,
    SmNullPointer = 1,
    SmInvalidArgument = 2,
    SmInvalidProblem = 3,
    SmGridTooCoarse = 4,
    SmSolverFailed = 5,
    SmIo = 6,
    SmNoExactSolution = 7,
    SmBufferTooSmall = 8,
    SmPanic = 9,
    SmInternal = 10,
}

/// Discrete field selector for [`sm_solution_field_shape`] and
/// [`sm_solution_copy_field`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmField {
    /// First velocity component on vertical edges, including ghost rows.
    SmU1 = 0,
    /// Second velocity component on horizontal edges, including ghost columns.
    SmU2 = 1,
    /// Pressure at cell centres.
    SmP = 2,
}

/// Scaled errors against the exact solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmErrors {
    pub velocity_l2: f64,
    pub pressure_l2: f64,
    pub velocity_h1: f64,
    pub velocity_max: f64,
    pub velocity_gradient_max: f64,
}

/// Opaque problem handle.
pub struct SmProblem {
    spec: ProblemSpec,
}

/// Opaque solution handle.
pub struct SmSolution {
    solution: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SmStatus {
    match e {
        Error::InvalidGrid(_) | Error::InvalidOperand(_) | Error::Parse(_) => SmStatus::SmInvalidArgument,
        Error::InvalidProblem(_) | Error::Precondition(_) => SmStatus::SmInvalidProblem,
        Error::GridTooCoarse(_) | Error::InterfaceNearBoundary(_) | Error::Geometry(_) => SmStatus::SmGridTooCoarse,
        Error::SolverFailure { .. } | Error::Numerical(_) => SmStatus::SmSolverFailed,
        Error::Io { .. } => SmStatus::SmIo,
        Error::Internal(_) => SmStatus::SmInternal,
    }
}

struct Failure(SmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `body`, converting errors and panics into a status.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SmStatus::SmOk,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SmStatus::SmPanic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SmStatus::SmNullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SmStatus::SmInvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn problem_out(out: *mut *mut SmProblem, make: impl FnOnce() -> Result<ProblemSpec, Failure>) -> SmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let spec = make()?;
        *out = Box::into_raw(Box::new(SmProblem { spec }));
        Ok(())
    })
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a built-in problem (`example1`, `example2`, `smooth`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_problem_builtin(name: *const c_char, out: *mut *mut SmProblem) -> SmStatus {
    problem_out(out, || Ok(problems::builtin(read_str(name, "name")?)?))
}

/// Parses a problem from config text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_problem_from_config(text: *const c_char, out: *mut *mut SmProblem) -> SmStatus {
    problem_out(out, || Ok(config::parse(read_str(text, "text")?)?))
}

/// Reads a problem from a config file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_problem_from_file(path: *const c_char, out: *mut *mut SmProblem) -> SmStatus {
    problem_out(out, || Ok(config::load_file(read_str(path, "path")?)?))
}

/// # Safety
/// `problem` must be null or a handle from one of the `sm_problem_*`
/// constructors that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sm_problem_free(problem: *mut SmProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves `problem` on an `n × n` grid. `tol <= 0` selects the default CG
/// tolerance; `corrections == 0` runs the plain MAC scheme.
///
/// # Safety
/// `problem` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sm_solve(
    problem: *const SmProblem,
    n: usize,
    tol: f64,
    corrections: i32,
    out: *mut *mut SmSolution,
) -> SmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let problem = problem.as_ref().ok_or_else(|| null("problem"))?;
        if tol.is_nan() {
            return Err(Failure(SmStatus::SmInvalidArgument, "tol is NaN".into()));
        }
        let opts = SolveOptions {
            cg: CgOptions {
                tol: (tol > 0.0).then_some(tol),
                ..CgOptions::default()
            },
            corrections: corrections != 0,
            provenance: false,
        };
        let solution = solve_problem(&problem.spec, n, &opts)?;
        *out = Box::into_raw(Box::new(SmSolution { solution }));
        Ok(())
    })
}

/// # Safety
/// `solution` must be null or a live handle from [`sm_solve`].
#[no_mangle]
pub unsafe extern "C" fn sm_solution_free(solution: *mut SmSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Grid size, mesh width, CG iterations and multiplier of a solve. Any
/// output pointer may be null.
///
/// # Safety
/// `solution` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_solution_info(
    solution: *const SmSolution,
    n: *mut usize,
    h: *mut f64,
    cg_iterations: *mut usize,
    lambda: *mut f64,
) -> SmStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        if let Some(p) = n.as_mut() {
            *p = s.grid.n();
        }
        if let Some(p) = h.as_mut() {
            *p = s.grid.h();
        }
        if let Some(p) = cg_iterations.as_mut() {
            *p = s.stats.iterations;
        }
        if let Some(p) = lambda.as_mut() {
            *p = s.fields.lambda;
        }
        Ok(())
    })
}

// taken as an integer so out-of-range values from C are rejected, not UB
fn field_of(s: &Solution, which: i32) -> Result<&Field, Failure> {
    match which {
        w if w == SmField::SmU1 as i32 => Ok(&s.fields.u1),
        w if w == SmField::SmU2 as i32 => Ok(&s.fields.u2),
        w if w == SmField::SmP as i32 => Ok(&s.fields.p),
        w => Err(Failure(SmStatus::SmInvalidArgument, format!("unknown field selector {w}"))),
    }
}

/// Shape of a stored field; `which` is an [`SmField`] value. Values are
/// row-major with `nx` entries per row.
///
/// # Safety
/// `solution` must be a live handle; `nx` and `ny` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sm_solution_field_shape(
    solution: *const SmSolution,
    which: i32,
    nx: *mut usize,
    ny: *mut usize,
) -> SmStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        let (a, b) = field_of(s, which)?.shape();
        *nx.as_mut().ok_or_else(|| null("nx"))? = a;
        *ny.as_mut().ok_or_else(|| null("ny"))? = b;
        Ok(())
    })
}

/// Copies a field into `buf`, which must hold at least `nx * ny` values.
///
/// # Safety
/// `solution` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sm_solution_copy_field(
    solution: *const SmSolution,
    which: i32,
    buf: *mut f64,
    len: usize,
) -> SmStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let values = field_of(s, which)?.values();
        if len < values.len() {
            return Err(Failure(
                SmStatus::SmBufferTooSmall,
                format!("buffer holds {len} values, field has {}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Scaled errors of `solution` against the exact solution of `problem`.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sm_solution_errors(
    problem: *const SmProblem,
    solution: *const SmSolution,
    out: *mut SmErrors,
) -> SmStatus {
    guard(|| {
        let p = &problem.as_ref().ok_or_else(|| null("problem"))?.spec;
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.solution;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if p.exact.is_none() {
            return Err(Failure(
                SmStatus::SmNoExactSolution,
                format!("problem {} has no exact solution", p.name),
            ));
        }
        if p.length != s.grid.length() || p.origin != s.grid.origin() {
            return Err(Failure(SmStatus::SmInvalidArgument, "solution is not on this problem's domain".into()));
        }
        let ScaledErrors {
            eu_l2,
            ep_l2,
            eu_h1,
            eu_max,
            eu_gradmax,
        } = compute_errors(p, &s.grid, &s.fields)?;
        *out = SmErrors {
            velocity_l2: eu_l2,
            pressure_l2: ep_l2,
            velocity_h1: eu_h1,
            velocity_max: eu_max,
            velocity_gradient_max: eu_gradmax,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping() {
        assert_eq!(status_of(&Error::Parse("x".into())), SmStatus::SmInvalidArgument);
        assert_eq!(status_of(&Error::GridTooCoarse("x".into())), SmStatus::SmGridTooCoarse);
        let e = Error::SolverFailure {
            iterations: 3,
            last: 1.0,
            history: vec![],
        };
        assert_eq!(status_of(&e), SmStatus::SmSolverFailed);
    }

    #[test]
    fn panics_become_status() {
        let st = guard(|| panic!("boom"));
        assert_eq!(st, SmStatus::SmPanic);
        let msg = unsafe { CStr::from_ptr(sm_last_error()) }.to_str().unwrap();
        assert_eq!(msg, "panic: boom");
    }

    #[test]
    fn version_is_terminated() {
        let v = unsafe { CStr::from_ptr(sm_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
