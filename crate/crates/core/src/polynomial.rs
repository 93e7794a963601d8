//! Dense univariate polynomials with complex double-precision coefficients.
//!
//! Coefficients are stored lowest degree first. A polynomial is kept in
//! trimmed form: the highest stored coefficient is nonzero, and the zero
//! polynomial has no coefficients at all. Only exact `0.0` coefficients are
//! trimmed, so numerically small leading terms survive arithmetic.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// Iteration budget for the simultaneous root finder.
pub const MAX_ROOT_ITERATIONS: usize = 500;

/// Relative step size below which an Aberth iterate counts as converged.
const STEP_TOLERANCE: f64 = 1e-13;

#[derive(Clone, PartialEq, Default)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = ComplexPoly { coeffs };
        p.trim();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        ComplexPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `c z^degree`.
    pub fn monomial(c: Complex64, degree: usize) -> Self {
        let mut coeffs = vec![Complex64::zero(); degree + 1];
        coeffs[degree] = c;
        Self::new(coeffs)
    }

    /// Monic polynomial whose roots are exactly `roots`, with multiplicity.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            // multiply by (z - r)
            coeffs.push(Complex64::zero());
            for i in (1..coeffs.len()).rev() {
                coeffs[i] = coeffs[i - 1] - r * coeffs[i];
            }
            coeffs[0] = -r * coeffs[0];
        }
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> Complex64 {
        self.coeffs.get(i).copied().unwrap_or_else(Complex64::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_else(Complex64::zero)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::zero(), |acc, &c| acc * z + c)
    }

    /// `sum |a_i| |z|^i`, the magnitude against which an evaluation is
    /// compared when judging whether it is at rounding level.
    pub fn eval_magnitude(&self, z: Complex64) -> f64 {
        let r = z.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Multiply by `z^k`.
    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Complex64::zero(); k];
        coeffs.extend_from_slice(&self.coeffs);
        ComplexPoly { coeffs }
    }

    /// Coefficient-wise modulus, as a polynomial with nonnegative real
    /// coefficients.
    pub fn abs_coeffs(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .map(|c| Complex64::new(c.norm(), 0.0))
                .collect(),
        )
    }

    /// All complex roots, with multiplicity, by Aberth–Ehrlich iteration.
    ///
    /// Every returned root `r` satisfies `|p(r)| <= tol * sum |a_i||r|^i`.
    pub fn roots(&self, tol: f64) -> Result<Vec<Complex64>> {
        let degree = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => return Err(Error::DegenerateInput),
        };
        // exact zero roots
        let zeros = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        let reduced = ComplexPoly::new(self.coeffs[zeros..].to_vec());
        let mut roots = vec![Complex64::zero(); zeros];
        if zeros == degree {
            return Ok(roots);
        }
        roots.extend(reduced.aberth(tol)?);
        Ok(roots)
    }

    fn aberth(&self, tol: f64) -> Result<Vec<Complex64>> {
        let n = self.degree().expect("nonzero");
        if n == 1 {
            return Ok(vec![-self.coeffs[0] / self.coeffs[1]]);
        }
        let dp = self.derivative();
        let mut z = self.initial_guesses();
        let mut done = vec![false; n];
        let eps = f64::EPSILON;

        for _ in 0..MAX_ROOT_ITERATIONS {
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let zi = z[i];
                let p = self.eval(zi);
                if p.norm() <= 4.0 * eps * self.eval_magnitude(zi) {
                    done[i] = true;
                    continue;
                }
                let d = dp.eval(zi);
                let ratio = if d.is_zero() {
                    // stationary point: nudge off it
                    Complex64::new(1e-8 * (1.0 + zi.norm()), 0.0)
                } else {
                    p / d
                };
                let repulsion: Complex64 = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (zi - z[j]).inv())
                    .sum();
                let denom = Complex64::new(1.0, 0.0) - ratio * repulsion;
                let step = if denom.is_zero() || !denom.is_finite() {
                    ratio
                } else {
                    ratio / denom
                };
                if !step.is_finite() {
                    continue;
                }
                z[i] = zi - step;
                if step.norm() < STEP_TOLERANCE * (1.0 + z[i].norm()) {
                    done[i] = true;
                }
            }
            if done.iter().all(|&d| d) {
                return self.accept(z, tol);
            }
        }
        self.accept(z, tol)
    }

    fn accept(&self, z: Vec<Complex64>, tol: f64) -> Result<Vec<Complex64>> {
        let worst = z
            .iter()
            .map(|&r| {
                let m = self.eval_magnitude(r);
                if m == 0.0 {
                    0.0
                } else {
                    self.eval(r).norm() / m
                }
            })
            .fold(0.0, f64::max);
        if worst <= tol && z.iter().all(|r| r.is_finite()) {
            Ok(z)
        } else {
            Err(Error::NonConvergence {
                iterations: MAX_ROOT_ITERATIONS,
                residual: worst,
            })
        }
    }

    /// Starting points on the circles given by the upper convex hull of
    /// `(i, log|a_i|)`; each hull edge of width `w` contributes `w` points on
    /// a circle of radius `(|a_i|/|a_j|)^(1/w)`.
    fn initial_guesses(&self) -> Vec<Complex64> {
        let n = self.degree().expect("nonzero");
        let pts: Vec<(usize, f64)> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i, c.norm().ln()))
            .collect();

        let mut hull: Vec<(usize, f64)> = Vec::new();
        for &p in &pts {
            while hull.len() >= 2 {
                let (i1, y1) = hull[hull.len() - 2];
                let (i2, y2) = hull[hull.len() - 1];
                let cross = (i2 as f64 - i1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - i1 as f64);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }

        let sigma = 0.7;
        let mut guesses = Vec::with_capacity(n);
        for (e, w) in hull.windows(2).enumerate() {
            let (i, yi) = w[0];
            let (j, yj) = w[1];
            let width = j - i;
            let radius = ((yi - yj) / width as f64).exp();
            for k in 0..width {
                let theta = 2.0 * PI * k as f64 / width as f64
                    + 2.0 * PI * e as f64 / n as f64
                    + sigma;
                guesses.push(Complex64::from_polar(radius, theta));
            }
        }
        guesses
    }

    /// Real roots: those with `|Im| <= tol`, as reals sorted ascending.
    pub fn real_roots(&self, tol: f64) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = self
            .roots(ROOT_BACKWARD_TOL)?
            .into_iter()
            .filter(|r| r.im.abs() <= tol)
            .map(|r| r.re)
            .collect();
        out.sort_by(|a, b| a.total_cmp(b));
        Ok(out)
    }
}

/// Default backward-error acceptance for [`ComplexPoly::roots`].
pub const ROOT_BACKWARD_TOL: f64 = 1e-10;

impl fmt::Debug for ComplexPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexPoly{:?}", self.coeffs)
    }
}

impl fmt::Display for ComplexPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})z")?,
                _ => write!(f, "({c})z^{i}")?,
            }
        }
        Ok(())
    }
}

impl Add for &ComplexPoly {
    type Output = ComplexPoly;
    fn add(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &ComplexPoly {
    type Output = ComplexPoly;
    fn sub(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, rhs: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPoly::zero();
        }
        let mut out = vec![Complex64::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPoly::new(out)
    }
}

impl Neg for &ComplexPoly {
    type Output = ComplexPoly;
    fn neg(self) -> ComplexPoly {
        ComplexPoly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ComplexPoly {
            type Output = ComplexPoly;
            fn $m(self, rhs: ComplexPoly) -> ComplexPoly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&ComplexPoly> for ComplexPoly {
            type Output = ComplexPoly;
            fn $m(self, rhs: &ComplexPoly) -> ComplexPoly {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Mul<Complex64> for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, rhs: Complex64) -> ComplexPoly {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, rhs: f64) -> ComplexPoly {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &ComplexPoly, b: &ComplexPoly, tol: f64) -> bool {
        let n = a.coeffs().len().max(b.coeffs().len());
        (0..n).all(|i| (a.coeff(i) - b.coeff(i)).norm() <= tol)
    }

    /// Match two root multisets greedily, returning the worst distance.
    fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for &x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, &y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn from_roots_examples() {
        assert_eq!(ComplexPoly::from_roots(&[]), ComplexPoly::one());
        assert_eq!(
            ComplexPoly::from_roots(&[c(1.0, 0.0), c(-1.0, 0.0)]),
            ComplexPoly::from_real(&[-1.0, 0.0, 1.0])
        );
        let s = 3f64.sqrt();
        let p = ComplexPoly::from_roots(&[c(-2.0 + s, 0.0), c(-2.0 - s, 0.0)]);
        assert!(close(&p, &ComplexPoly::from_real(&[1.0, 4.0, 1.0]), 1e-14));
    }

    #[test]
    fn arithmetic_examples() {
        let a = ComplexPoly::from_real(&[-1.0, 0.0, 1.0]);
        assert_eq!(&a + &ComplexPoly::one(), ComplexPoly::from_real(&[0.0, 0.0, 1.0]));
        let m = &ComplexPoly::from_real(&[-1.0, 1.0]) * &ComplexPoly::from_real(&[1.0, 1.0]);
        assert_eq!(m, a);
        let s = ComplexPoly::from_real(&[1.0, 0.0, 1.0]).scale(c(4.0, 0.0));
        assert_eq!(s, ComplexPoly::from_real(&[4.0, 0.0, 4.0]));
        // cancellation trims
        assert!((&a - &a).is_zero());
        assert_eq!((&a - &a).degree(), None);
    }

    #[test]
    fn near_zero_leading_coefficient_is_kept() {
        let p = ComplexPoly::from_real(&[1.0, 1e-300]);
        assert_eq!(p.degree(), Some(1));
    }

    #[test]
    fn derivative_examples() {
        let p = ComplexPoly::from_real(&[1.0, 0.0, -4.0, 0.0, 1.0]);
        assert_eq!(p.derivative(), ComplexPoly::from_real(&[0.0, -8.0, 0.0, 4.0]));
        assert!(ComplexPoly::from_real(&[7.0]).derivative().is_zero());
        assert_eq!(
            ComplexPoly::from_real(&[1.0, 4.0, 1.0]).derivative(),
            ComplexPoly::from_real(&[4.0, 2.0])
        );
    }

    #[test]
    fn eval_examples() {
        let s = 3f64.sqrt();
        let p = ComplexPoly::from_real(&[1.0, 4.0, 1.0]);
        assert!(p.eval(c(-2.0 + s, 0.0)).norm() < 1e-14);
        let q = ComplexPoly::from_real(&[1.0, 0.0, -4.0, 0.0, 1.0]);
        assert_eq!(q.eval(c(1.0, 0.0)), c(-2.0, 0.0));
        let cube = ComplexPoly::monomial(c(1.0, 0.0), 3);
        assert!((cube.eval(c(0.0, 2.0)) - c(0.0, -8.0)).norm() < 1e-14);
    }

    #[test]
    fn roots_examples() {
        let s = 3f64.sqrt();
        let r = ComplexPoly::from_real(&[1.0, 4.0, 1.0]).roots(1e-12).unwrap();
        assert!(multiset_distance(&r, &[c(-2.0 + s, 0.0), c(-2.0 - s, 0.0)]) < 1e-12);

        let r = ComplexPoly::from_real(&[1.0, 0.0, -4.0, 0.0, 1.0]).roots(1e-12).unwrap();
        let a = (2.0 - s).sqrt();
        let b = (2.0 + s).sqrt();
        let expected = [c(a, 0.0), c(-a, 0.0), c(b, 0.0), c(-b, 0.0)];
        assert!(multiset_distance(&r, &expected) < 1e-12);

        let r = ComplexPoly::from_real(&[-1.0, 0.0, 0.0, 1.0]).roots(1e-12).unwrap();
        let cube_roots: Vec<_> = (0..3)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0))
            .collect();
        assert!(multiset_distance(&r, &cube_roots) < 1e-12);
    }

    #[test]
    fn roots_handles_zero_and_repeated_roots() {
        let p = ComplexPoly::from_real(&[0.0, 0.0, 1.0, 1.0]);
        let r = p.roots(1e-12).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.iter().filter(|z| z.is_zero()).count(), 2);

        let sq = ComplexPoly::from_real(&[1.0, -2.0, 1.0]);
        let r = sq.roots(1e-12).unwrap();
        assert!(r.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-6));
    }

    #[test]
    fn roots_rejects_constants() {
        assert_eq!(ComplexPoly::one().roots(1e-10), Err(Error::DegenerateInput));
        assert_eq!(ComplexPoly::zero().roots(1e-10), Err(Error::DegenerateInput));
    }

    #[test]
    fn real_roots_examples() {
        let p = ComplexPoly::from_real(&[0.0, -0.5, 0.0, 0.125]);
        let r = p.real_roots(1e-9).unwrap();
        assert_eq!(r.len(), 3);
        for (x, y) in r.iter().zip([-2.0, 0.0, 2.0]) {
            assert!((x - y).abs() < 1e-12);
        }

        // a(a^2-26)(a^2-1)/50
        let q = &(&ComplexPoly::from_real(&[0.0, 1.0 / 50.0])
            * &ComplexPoly::from_real(&[-26.0, 0.0, 1.0]))
            * &ComplexPoly::from_real(&[-1.0, 0.0, 1.0]);
        let r = q.real_roots(1e-9).unwrap();
        let s = 26f64.sqrt();
        for (x, y) in r.iter().zip([-s, -1.0, 0.0, 1.0, s]) {
            assert!((x - y).abs() < 1e-12);
        }

        assert!(ComplexPoly::from_real(&[1.0, 0.0, 1.0]).real_roots(1e-9).unwrap().is_empty());
    }

    #[test]
    fn roots_of_widely_spread_polynomial() {
        let expected: Vec<_> = [1e-4, -3e-2, 1.0, -40.0, 2e3, -1e5]
            .iter()
            .map(|&x| c(x, 0.0))
            .collect();
        let p = ComplexPoly::from_roots(&expected);
        let r = p.roots(1e-10).unwrap();
        for e in &expected {
            let best = r.iter().map(|z| (z - e).norm() / e.norm()).fold(f64::MAX, f64::min);
            assert!(best < 1e-9, "root {e} missed ({best:e})");
        }
    }

    fn arb_roots(max: usize) -> impl Strategy<Value = Vec<Complex64>> {
        // well separated: jittered points on a grid of spacing 0.5
        prop::collection::btree_set((-6i32..6, -6i32..6), 1..=max).prop_flat_map(|cells| {
            let n = cells.len();
            (Just(cells), prop::collection::vec((-0.1f64..0.1, -0.1f64..0.1), n)).prop_map(
                |(cells, jit)| {
                    cells
                        .into_iter()
                        .zip(jit)
                        .map(|((a, b), (x, y))| c(a as f64 * 0.5 + x, b as f64 * 0.5 + y))
                        .collect()
                },
            )
        })
    }

    fn arb_poly() -> impl Strategy<Value = ComplexPoly> {
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 1..8)
            .prop_map(|v| ComplexPoly::new(v.into_iter().map(|(a, b)| c(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn roots_recover_from_roots(roots in arb_roots(20)) {
            let p = ComplexPoly::from_roots(&roots);
            let found = p.roots(1e-10).unwrap();
            prop_assert_eq!(found.len(), roots.len());
            prop_assert!(multiset_distance(&found, &roots) < 1e-8);
            for r in &roots {
                prop_assert!(p.eval(*r).norm() <= 1e-9 * p.eval_magnitude(*r));
            }
        }

        #[test]
        fn product_rule(p in arb_poly(), q in arb_poly()) {
            let lhs = (&p * &q).derivative();
            let rhs = &(&p.derivative() * &q) + &(&p * &q.derivative());
            let scale = p.max_abs_coeff() * q.max_abs_coeff() * 16.0 + 1.0;
            prop_assert!(close(&lhs, &rhs, 1e-12 * scale));
        }
    }
}
