//! Small dense linear algebra: LU with partial pivoting.

use crate::error::{Error, Result};

/// Row-major dense square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    a: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, a: vec![0.0; n * n] }
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        DenseMatrix {
            n: N,
            a: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.n + c] = v;
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.n + c] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                self.a[r * self.n..(r + 1) * self.n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|c| (0..self.n).map(|r| self.get(r, c).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// LU factorization `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
}

impl Lu {
    pub fn factor(m: &DenseMatrix) -> Result<Lu> {
        let n = m.n;
        let mut lu = m.a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|r| (r, lu[r * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= f64::EPSILON * scale * n as f64 || pmax == 0.0 {
                return Err(Error::Numerical(format!(
                    "singular matrix: pivot {pmax:.3e} in column {k}"
                )));
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                piv.swap(k, p);
            }
            let d = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / d;
                lu[r * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        lu[r * n + c] -= f * lu[k * n + c];
                    }
                }
            }
        }
        Ok(Lu { n, lu, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
        x
    }

    /// Exact 1-norm of the inverse (solves against every unit vector).
    pub fn inverse_norm1(&self) -> f64 {
        let n = self.n;
        let mut best = 0.0f64;
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            let col = self.solve(&e);
            best = best.max(col.iter().map(|v| v.abs()).sum());
        }
        best
    }
}

/// Solves `A x = b` and returns `x` with the max-norm residual.
pub fn solve_checked(a: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let lu = Lu::factor(a)?;
    let x = lu.solve(b);
    let ax = a.mul_vec(&x);
    let res = ax
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    Ok((x, res))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = DenseMatrix::from_rows([[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]]);
        let (x, res) = solve_checked(&a, &[3.0, 2.0, 4.0]).unwrap();
        for v in &x {
            assert!((v - 1.0).abs() < 1e-14);
        }
        assert!(res < 1e-14);
    }

    #[test]
    fn detects_singular() {
        let a = DenseMatrix::from_rows([[1.0, 2.0], [2.0, 4.0]]);
        assert!(Lu::factor(&a).is_err());
    }

    #[test]
    fn inverse_norm_of_diagonal() {
        let a = DenseMatrix::from_rows([[2.0, 0.0], [0.0, 0.25]]);
        let lu = Lu::factor(&a).unwrap();
        assert!((lu.inverse_norm1() - 4.0).abs() < 1e-15);
    }
}
