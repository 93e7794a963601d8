//! Small dense complex matrices: singular values by one-sided Jacobi and
//! linear solves by LU with partial pivoting.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Copy with one row and one column removed.
    pub fn without(&self, row: usize, col: usize) -> Self {
        Self::from_fn(self.rows - 1, self.cols - 1, |r, c| {
            let r = if r >= row { r + 1 } else { r };
            let c = if c >= col { c + 1 } else { c };
            self[(r, c)]
        })
    }

    /// Scale column `c` by `d[c]`.
    pub fn scale_columns(&self, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), self.cols);
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * d[c])
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        // one-sided Jacobi on the columns of A (or of A^H when wide)
        let (m, n, mut cols) = if self.rows >= self.cols {
            let cols: Vec<Vec<Complex64>> = (0..self.cols)
                .map(|c| (0..self.rows).map(|r| self[(r, c)]).collect())
                .collect();
            (self.rows, self.cols, cols)
        } else {
            let cols: Vec<Vec<Complex64>> = (0..self.rows)
                .map(|r| self.row(r).iter().map(|z| z.conj()).collect())
                .collect();
            (self.cols, self.rows, cols)
        };
        let _ = m;

        let eps = f64::EPSILON;
        for _sweep in 0..80 {
            let mut rotated = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    let alpha: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum();
                    let gamma: Complex64 = cols[i]
                        .iter()
                        .zip(&cols[j])
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let g = gamma.norm();
                    if g == 0.0 || g <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let cs = 1.0 / (1.0 + t * t).sqrt();
                    let sn = cs * t;
                    let (ci, cj) = {
                        let (lo, hi) = cols.split_at_mut(j);
                        (&mut lo[i], &mut hi[0])
                    };
                    for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
                        let bj = *b * phase.conj();
                        let ai = *a;
                        *a = ai * cs - bj * sn;
                        *b = ai * sn + bj * cs;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<f64> = cols
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Number of singular values above `tol` times the largest.
    pub fn rank(&self, tol: f64) -> usize {
        let sv = self.singular_values();
        match sv.first() {
            Some(&top) if top > 0.0 => sv.iter().filter(|&&s| s > tol * top).count(),
            _ => 0,
        }
    }

    /// Solve `A x = b` for square `A`.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.len(), self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.to_vec();
        let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::Singular);
        }
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .expect("nonempty");
            if a[(p, k)].norm() <= f64::EPSILON * scale * n as f64 {
                return Err(Error::Singular);
            }
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                }
                x.swap(k, p);
            }
            let pivot = a[(k, k)];
            for r in (k + 1)..n {
                let f = a[(r, k)] / pivot;
                if f.is_zero() {
                    continue;
                }
                for c in k..n {
                    let v = a[(k, c)];
                    a[(r, c)] -= f * v;
                }
                let v = x[k];
                x[r] -= f * v;
            }
        }
        for k in (0..n).rev() {
            let s: Complex64 = ((k + 1)..n).map(|c| a[(k, c)] * x[c]).sum();
            x[k] = (x[k] - s) / a[(k, k)];
        }
        Ok(x)
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rank_of_simple_matrices() {
        assert_eq!(CMatrix::zeros(3, 3).rank(1e-10), 0);
        assert_eq!(CMatrix::identity(3).rank(1e-10), 3);
        // rank-one outer product
        let u = [c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)];
        let v = [c(0.5, 0.0), c(1.0, -2.0), c(3.0, 1.0)];
        let m = CMatrix::from_fn(3, 3, |r, s| u[r] * v[s].conj());
        assert_eq!(m.rank(1e-10), 1);
    }

    #[test]
    fn singular_values_of_diagonal_and_unitary() {
        let m = CMatrix::from_fn(3, 3, |r, s| if r == s { c(0.0, (r + 1) as f64) } else { c(0.0, 0.0) });
        let sv = m.singular_values();
        for (a, b) in sv.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let h = 1.0 / 2f64.sqrt();
        let u = CMatrix::from_fn(2, 2, |r, s| match (r, s) {
            (0, 0) => c(h, 0.0),
            (0, 1) => c(0.0, h),
            (1, 0) => c(0.0, h),
            _ => c(h, 0.0),
        });
        for s in u.singular_values() {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn wide_matrix_singular_values() {
        let m = CMatrix::from_fn(2, 3, |r, s| if r == s { c(2.0, 0.0) } else { c(0.0, 0.0) });
        assert_eq!(m.singular_values().len(), 2);
        assert_eq!(m.rank(1e-12), 2);
    }

    #[test]
    fn solve_detects_singular() {
        let m = CMatrix::from_fn(2, 2, |_, _| c(1.0, 0.0));
        assert_eq!(m.solve(&[c(1.0, 0.0), c(1.0, 0.0)]), Err(Error::Singular));
    }

    proptest! {
        #[test]
        fn solve_round_trip(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
                            rhs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4)) {
            let mut m = CMatrix::from_fn(4, 4, |r, s| { let (a, b) = entries[r * 4 + s]; c(a, b) });
            for i in 0..4 { m[(i, i)] += c(4.0, 0.0); }
            let b: Vec<_> = rhs.iter().map(|&(a, b)| c(a, b)).collect();
            let x = m.solve(&b).unwrap();
            let back = m.mul_vec(&x);
            for (p, q) in back.iter().zip(&b) {
                prop_assert!((p - q).norm() < 1e-12);
            }
        }

        #[test]
        fn frobenius_norm_matches_singular_values(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 20)) {
            let m = CMatrix::from_fn(5, 4, |r, s| { let (a, b) = entries[r * 4 + s]; c(a, b) });
            let fro: f64 = entries.iter().map(|(a, b)| a * a + b * b).sum();
            let sv: f64 = m.singular_values().iter().map(|s| s * s).sum();
            prop_assert!((fro - sv).abs() < 1e-12 * (1.0 + fro));
        }
    }
}
