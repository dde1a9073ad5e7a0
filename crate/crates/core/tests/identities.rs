//! Summation-by-parts and solver invariants on random inputs.

use proptest::prelude::*;

use stokes_mac::grid::{
    apply_ghost_closure, diff_backward, diff_forward, inner_product, laplacian, norm, Axis, Field, GridFamily, Space,
    StaggeredGrid,
};
use stokes_mac::solver::{apply_neg_laplacian, Layout, PoissonSolver};

fn field(grid: &StaggeredGrid, fam: GridFamily, values: &[f64]) -> Field {
    let mut k = 0;
    Field::from_interior(grid, fam, |_, _| {
        k += 1;
        values[(k - 1) % values.len()]
    })
}

fn closed(grid: &StaggeredGrid, fam: GridFamily, values: &[f64]) -> Field {
    apply_ghost_closure(grid, field(grid, fam, values), None).unwrap()
}

/// Inner products of random fields can cancel, so compare against the
/// Cauchy-Schwarz bound `‖x‖ ‖y‖` instead of the result.
fn close_scaled(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 7..41)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_is_minus_adjoint_of_divergence(n in 4usize..13, q in values(), v in values(), w in values()) {
        let grid = StaggeredGrid::new(n, [-1.0, 0.5], [2.0, 2.0]).unwrap();
        let p = field(&grid, GridFamily::CellCenter, &q);
        let v1 = closed(&grid, GridFamily::VEdge, &v);
        let v2 = closed(&grid, GridFamily::HEdge, &w);
        for (v, axis, space) in [(&v1, Axis::X, Space::V1), (&v2, Axis::Y, Space::V2)] {
            let gp = diff_forward(&grid, &p, axis).unwrap();
            let dv = diff_backward(&grid, v, axis).unwrap();
            let lhs = inner_product(&grid, space, &gp, v).unwrap();
            let rhs = -inner_product(&grid, Space::M, &p, &dv).unwrap();
            let scale = (norm(&grid, space, &gp).unwrap() * norm(&grid, space, v).unwrap())
                .max(norm(&grid, Space::M, &p).unwrap() * norm(&grid, Space::M, &dv).unwrap());
            prop_assert!(close_scaled(lhs, rhs, scale), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn laplacian_is_symmetric_and_negative(n in 4usize..13, v in values(), w in values()) {
        let grid = StaggeredGrid::new(n, [0.0, 0.0], [3.0, 3.0]).unwrap();
        for (fam, space) in [(GridFamily::VEdge, Space::V1), (GridFamily::HEdge, Space::V2)] {
            let a = closed(&grid, fam, &v);
            let b = closed(&grid, fam, &w);
            let lab = inner_product(&grid, space, &laplacian(&grid, &a).unwrap(), &b).unwrap();
            let lba = inner_product(&grid, space, &laplacian(&grid, &b).unwrap(), &a).unwrap();
            let scale = norm(&grid, space, &laplacian(&grid, &a).unwrap()).unwrap() * norm(&grid, space, &b).unwrap();
            prop_assert!(close_scaled(lab, lba, scale));
            let laa = inner_product(&grid, space, &laplacian(&grid, &a).unwrap(), &a).unwrap();
            prop_assert!(laa < 0.0);
        }
    }

    #[test]
    fn fast_solve_inverts_the_operator(n in 4usize..17, v in values()) {
        let grid = StaggeredGrid::new(n, [-2.0, -2.0], [4.0, 4.0]).unwrap();
        let fast = PoissonSolver::new(&grid);
        for fam in [GridFamily::VEdge, GridFamily::HEdge] {
            let len = Layout::of(fam, n).len();
            let f: Vec<f64> = (0..len).map(|k| v[k % v.len()] + k as f64 * 1e-3).collect();
            let u = fast.solve(fam, &f).unwrap();
            let back = apply_neg_laplacian(&grid, fam, &u).unwrap();
            let err = back.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = f.iter().map(|x| x.abs()).fold(0.0, f64::max);
            prop_assert!(err <= 1e-11 * scale, "{err}");
        }
    }
}
