#ifndef STOKES_MAC_H
#define STOKES_MAC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `SM_OK` is zero; everything else is a failure.
typedef enum SmStatus {
  SM_OK = 0,
  SM_NULL_POINTER = 1,
  SM_INVALID_ARGUMENT = 2,
  SM_INVALID_PROBLEM = 3,
  SM_GRID_TOO_COARSE = 4,
  SM_SOLVER_FAILED = 5,
  SM_IO = 6,
  SM_NO_EXACT_SOLUTION = 7,
  SM_BUFFER_TOO_SMALL = 8,
  SM_PANIC = 9,
  SM_INTERNAL = 10,
} SmStatus;

// Discrete field selector for [`sm_solution_field_shape`] and
// [`sm_solution_copy_field`].
typedef enum SmField {
  // First velocity component on vertical edges, including ghost rows.
  SM_U1 = 0,
  // Second velocity component on horizontal edges, including ghost columns.
  SM_U2 = 1,
  // Pressure at cell centres.
  SM_P = 2,
} SmField;

// Opaque problem handle.
typedef struct SmProblem SmProblem;

// Opaque solution handle.
typedef struct SmSolution SmSolution;

// Scaled errors against the exact solution.
typedef struct SmErrors {
  double velocity_l2;
  double pressure_l2;
  double velocity_h1;
  double velocity_max;
  double velocity_gradient_max;
} SmErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null if none. The pointer
// stays valid until the next failing call on the same thread.
const char *sm_last_error(void);

// Library version as a static NUL-terminated string.
const char *sm_version(void);

// Loads a built-in problem (`example1`, `example2`, `smooth`).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a writable pointer.
enum SmStatus sm_problem_builtin(const char *name, struct SmProblem **out);

// Parses a problem from config text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer.
enum SmStatus sm_problem_from_config(const char *text, struct SmProblem **out);

// Reads a problem from a config file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum SmStatus sm_problem_from_file(const char *path, struct SmProblem **out);

// # Safety
// `problem` must be null or a handle from one of the `sm_problem_*`
// constructors that has not been freed.
void sm_problem_free(struct SmProblem *problem);

// Solves `problem` on an `n × n` grid. `tol <= 0` selects the default CG
// tolerance; `corrections == 0` runs the plain MAC scheme.
//
// # Safety
// `problem` must be a live handle and `out` a writable pointer.
enum SmStatus sm_solve(const struct SmProblem *problem,
                       size_t n,
                       double tol,
                       int32_t corrections,
                       struct SmSolution **out);

// # Safety
// `solution` must be null or a live handle from [`sm_solve`].
void sm_solution_free(struct SmSolution *solution);

// Grid size, mesh width, CG iterations and multiplier of a solve. Any
// output pointer may be null.
//
// # Safety
// `solution` must be a live handle; non-null outputs must be writable.
enum SmStatus sm_solution_info(const struct SmSolution *solution,
                               size_t *n,
                               double *h,
                               size_t *cg_iterations,
                               double *lambda);

// Shape of a stored field; `which` is an [`SmField`] value. Values are
// row-major with `nx` entries per row.
//
// # Safety
// `solution` must be a live handle; `nx` and `ny` must be writable.
enum SmStatus sm_solution_field_shape(const struct SmSolution *solution,
                                      int32_t which,
                                      size_t *nx,
                                      size_t *ny);

// Copies a field into `buf`, which must hold at least `nx * ny` values.
//
// # Safety
// `solution` must be a live handle and `buf` valid for `len` writes.
enum SmStatus sm_solution_copy_field(const struct SmSolution *solution,
                                     int32_t which,
                                     double *buf,
                                     size_t len);

// Scaled errors of `solution` against the exact solution of `problem`.
//
// # Safety
// Both handles must be live and `out` writable.
enum SmStatus sm_solution_errors(const struct SmProblem *problem,
                                 const struct SmSolution *solution,
                                 struct SmErrors *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STOKES_MAC_H */
