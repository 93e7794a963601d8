//! Forces between points, their Jacobian, and non-degeneracy tests.
//!
//! The force on `p = p[k,i]` is
//!
//! ```text
//! F[k,i] = sum_{j != i} (p + p[k,j]) / (n_k^2 (p - p[k,j]))
//!        - sum_j (p + p[k+1,j]) / (2 n_k n_{k+1} (p - p[k+1,j]))
//!        - sum_j (p + p[k-1,j]) / (2 n_k n_{k-1} (p - p[k-1,j]))
//! ```
//!
//! Each term is `w (a + b) / (a - b)`, with holomorphic partials
//! `-2b w / (a - b)^2` in `a` and `2a w / (a - b)^2` in `b`.

use num_complex::Complex64;

use super::Configuration;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Denominators below this fraction of the point scale are collisions.
const COLLISION_TOL: f64 = 1e-14;

/// Calls `f(weight, level, j)` for every term of the force on `p[k,i]`.
fn for_each_term(c: &Configuration, k: usize, i: usize, mut f: impl FnMut(f64, usize, usize)) {
    let t = c.ctype();
    let n = t.levels();
    let nk = t.counts()[k] as f64;
    for j in 0..t.counts()[k] {
        if j != i {
            f(1.0 / (nk * nk), k, j);
        }
    }
    for kk in [t.wrap(k as isize + 1), t.wrap(k as isize - 1)] {
        let nn = t.counts()[kk] as f64;
        let w = -1.0 / (2.0 * nk * nn);
        for j in 0..t.counts()[kk] {
            // a single level is its own neighbour; skip the point itself
            if n == 1 && j == i {
                continue;
            }
            f(w, kk, j);
        }
    }
}

fn difference(c: &Configuration, k: usize, i: usize, kk: usize, j: usize) -> Result<Complex64> {
    let p = c.points()[k][i];
    let q = c.points()[kk][j];
    let d = p - q;
    if d.norm() < COLLISION_TOL * p.norm().max(q.norm()) {
        return Err(Error::CollidingPoints {
            level: k,
            index: i,
            other_level: kk,
            other_index: j,
        });
    }
    Ok(d)
}

/// The force `F[k,i]` (zero-based indices).
pub fn force(c: &Configuration, k: usize, i: usize) -> Result<Complex64> {
    let p = c.points()[k][i];
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = None;
    for_each_term(c, k, i, |w, kk, j| {
        if err.is_some() {
            return;
        }
        match difference(c, k, i, kk, j) {
            Ok(d) => total += w * (p + c.points()[kk][j]) / d,
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// All forces of a configuration, shaped like its points.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceVector {
    pub forces: Vec<Vec<Complex64>>,
    /// `max |F[k,i]|`
    pub residual: f64,
}

impl ForceVector {
    pub fn flat(&self) -> Vec<Complex64> {
        self.forces.iter().flatten().copied().collect()
    }

    pub fn sum(&self) -> Complex64 {
        self.forces.iter().flatten().sum()
    }

    pub fn abs_sum(&self) -> f64 {
        self.forces.iter().flatten().map(|f| f.norm()).sum()
    }
}

pub fn force_vector(c: &Configuration) -> Result<ForceVector> {
    let mut forces = Vec::with_capacity(c.ctype().levels());
    let mut residual: f64 = 0.0;
    for (k, level) in c.points().iter().enumerate() {
        let mut row = Vec::with_capacity(level.len());
        for i in 0..level.len() {
            let f = force(c, k, i)?;
            residual = residual.max(f.norm());
            row.push(f);
        }
        forces.push(row);
    }
    Ok(ForceVector { forces, residual })
}

pub fn is_balanced(c: &Configuration, tol: f64) -> Result<bool> {
    Ok(force_vector(c)?.residual <= tol)
}

/// `dF[k,i] / dp[j,h]`, rows and columns in level-major order.
pub fn jacobian(c: &Configuration) -> Result<CMatrix> {
    let m = c.ctype().total();
    let offsets = c.ctype().offsets();
    let mut jac = CMatrix::zeros(m, m);
    let mut err = None;
    for (k, level) in c.points().iter().enumerate() {
        for (i, &p) in level.iter().enumerate() {
            let row = offsets[k] + i;
            for_each_term(c, k, i, |w, kk, j| {
                if err.is_some() {
                    return;
                }
                let d = match difference(c, k, i, kk, j) {
                    Ok(d) => d,
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                };
                let q = c.points()[kk][j];
                let d2 = d * d;
                jac[(row, row)] += -2.0 * w * q / d2;
                jac[(row, offsets[kk] + j)] += 2.0 * w * p / d2;
            });
        }
    }
    match err {
        Some(e) => Err(e),
        None => Ok(jac),
    }
}

/// Jacobian with respect to `log p`, i.e. `J diag(p)`. Same rank as
/// [`jacobian`], but insensitive to the spread of point magnitudes.
pub fn log_jacobian(c: &Configuration) -> Result<CMatrix> {
    Ok(jacobian(c)?.scale_columns(&c.flat()))
}

pub fn complex_rank(mat: &CMatrix, tol: f64) -> usize {
    mat.rank(tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nondegeneracy {
    pub rank: usize,
    /// `m - 1`
    pub expected: usize,
    pub residual: f64,
}

impl Nondegeneracy {
    pub fn is_nondegenerate(&self) -> bool {
        self.rank == self.expected
    }
}

/// Jacobian rank against `m - 1`, together with the force residual so the
/// caller can see whether the test was made at a balanced point.
pub fn nondegeneracy(c: &Configuration, tol: f64) -> Result<Nondegeneracy> {
    let residual = force_vector(c)?.residual;
    let rank = complex_rank(&log_jacobian(c)?, tol);
    Ok(Nondegeneracy {
        rank,
        expected: c.ctype().total() - 1,
        residual,
    })
}

pub fn is_nondegenerate(c: &Configuration, tol: f64) -> Result<bool> {
    Ok(nondegeneracy(c, tol)?.is_nondegenerate())
}

/// Two levels, every point real, level one positive and level two negative.
pub fn has_real_sign_pattern(c: &Configuration) -> bool {
    let real = |p: &Complex64| p.im.abs() <= 1e-10 * p.norm();
    c.ctype().levels() == 2
        && c.points()[0].iter().all(|p| real(p) && p.re > 0.0)
        && c.points()[1].iter().all(|p| real(p) && p.re < 0.0)
}

/// Certificate for two-level configurations with real points, level one
/// positive and level two negative: the leading `(m-1) x (m-1)` block of the
/// log-coordinate Jacobian is strictly diagonally dominant by rows, which
/// forces rank `m - 1`. Returns `false` whenever the sign hypotheses fail.
pub fn check_diagonal_dominance(c: &Configuration) -> Result<bool> {
    if !has_real_sign_pattern(c) {
        return Ok(false);
    }
    let jac = log_jacobian(c)?;
    let m = jac.rows();
    let sub = jac.without(m - 1, m - 1);
    Ok((0..sub.rows()).all(|r| {
        let diag = sub[(r, r)].norm();
        let off: f64 = (0..sub.cols()).filter(|&s| s != r).map(|s| sub[(r, s)].norm()).sum();
        diag > off
    }))
}
