//! Balance as a single polynomial identity.
//!
//! With `P_k(z) = prod_i (z - p[k,i])` and `P = prod_k P_k`, define
//!
//! ```text
//! Q(z) = sum_k [ z P_k'' P / (n_k^2 P_k)
//!              - z P_k' P_{k+1}' P / (n_k n_{k+1} P_k P_{k+1})
//!              + P_k' P / (n_k^2 P_k) ]
//! ```
//!
//! For pairwise distinct points, the configuration is balanced exactly when
//! `Q` vanishes identically. At a point of level `k`,
//! `Q(p) = P_k'(p) (P/P_k)(p) F[k,i]`.
//!
//! The quotients `P/P_k` and `P/(P_k P_{k+1})` are formed as products of the
//! remaining level polynomials, so no division is ever performed.

use num_complex::Complex64;

use crate::configuration::{ConfigType, Configuration};
use crate::error::{Error, Result};
use crate::polynomial::{ComplexPoly, ROOT_BACKWARD_TOL};

/// Relative threshold on Q coefficients used to call a configuration balanced.
pub const Q_ZERO_TOL: f64 = 1e-9;

/// Relative separation below which numerically computed roots are treated
/// as one repeated root. A double root splits at the square root of the
/// working precision, so this is much looser than the point tolerance.
pub const ROOT_SEPARATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelPolynomials {
    ctype: ConfigType,
    polys: Vec<ComplexPoly>,
    /// Coefficient-magnitude majorants of `polys`, used to scale Q.
    bounds: Vec<ComplexPoly>,
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl LevelPolynomials {
    /// `P_k` from the points of each level. All points must be distinct.
    pub fn from_configuration(c: &Configuration) -> Result<Self> {
        if let Some(Error::CollidingPoints { level, index, .. }) = c.global_collision() {
            let p = c.points()[level][index];
            return Err(Error::RepeatedRoot { re: p.re, im: p.im });
        }
        Ok(Self::from_points(c))
    }

    /// `P_k` from the points of each level, without the distinctness check.
    pub fn from_points(c: &Configuration) -> Self {
        let polys = c.points().iter().map(|l| ComplexPoly::from_roots(l)).collect();
        // prod (z + |p|) dominates the rounding in the expanded coefficients
        let bounds = c
            .points()
            .iter()
            .map(|l| {
                let mags: Vec<Complex64> = l.iter().map(|p| real(-p.norm())).collect();
                ComplexPoly::from_roots(&mags)
            })
            .collect();
        LevelPolynomials {
            ctype: c.ctype().clone(),
            polys,
            bounds,
        }
    }

    /// From monic coefficient polynomials; the roots of their product must
    /// be pairwise distinct.
    pub fn from_polys(polys: Vec<ComplexPoly>) -> Result<Self> {
        let mut counts = Vec::with_capacity(polys.len());
        for p in &polys {
            match p.degree() {
                Some(d) if d >= 1 => counts.push(d),
                _ => return Err(Error::InvalidType("level polynomials need degree at least 1".into())),
            }
            if (p.leading() - real(1.0)).norm() > 1e-12 {
                return Err(Error::InvalidConfiguration("level polynomials must be monic".into()));
            }
        }
        let ctype = ConfigType::new(counts)?;
        let product = polys.iter().fold(ComplexPoly::one(), |acc, p| &acc * p);
        let roots = product.roots(ROOT_BACKWARD_TOL)?;
        for (a, &r) in roots.iter().enumerate() {
            if r.norm() == 0.0 {
                return Err(Error::InvalidConfiguration("points must be nonzero".into()));
            }
            if roots[..a].iter().any(|&s| (r - s).norm() < ROOT_SEPARATION_TOL * r.norm().max(s.norm())) {
                return Err(Error::RepeatedRoot { re: r.re, im: r.im });
            }
        }
        let bounds = polys.iter().map(ComplexPoly::abs_coeffs).collect();
        Ok(LevelPolynomials { ctype, polys, bounds })
    }

    pub fn ctype(&self) -> &ConfigType {
        &self.ctype
    }

    pub fn polys(&self) -> &[ComplexPoly] {
        &self.polys
    }

    /// The product `P` of all level polynomials.
    pub fn product(&self) -> ComplexPoly {
        self.polys.iter().fold(ComplexPoly::one(), |acc, p| &acc * p)
    }
}

/// Q assembled from `polys`. With `magnitude`, every subtraction becomes an
/// addition, which on nonnegative majorants yields a coefficient-wise bound
/// on the terms that cancel in Q.
fn assemble(polys: &[ComplexPoly], counts: &[usize], magnitude: bool) -> ComplexPoly {
    let n = polys.len();
    let product_except = |skip: &[usize]| {
        (0..n)
            .filter(|j| !skip.contains(j))
            .fold(ComplexPoly::one(), |acc, j| &acc * &polys[j])
    };
    let z = ComplexPoly::monomial(real(1.0), 1);
    let mut q = ComplexPoly::zero();
    for k in 0..n {
        let next = (k + 1) % n;
        let nk = counts[k] as f64;
        let nn = counts[next] as f64;
        let d1 = polys[k].derivative();
        let d2 = d1.derivative();
        let rest = product_except(&[k]);

        let own = &(&(&z * &d2) + &d1) * &rest;
        let cross = &(&(&z * &d1) * &polys[next].derivative()) * &product_except(&[k, next]);
        let own = &own * (1.0 / (nk * nk));
        let cross = &cross * (1.0 / (nk * nn));
        q = if magnitude {
            &(&q + &own) + &cross
        } else {
            &(&q + &own) - &cross
        };
    }
    q
}

/// Q together with the per-coefficient magnitude it emerged from.
#[derive(Debug, Clone, PartialEq)]
pub struct QReport {
    pub q: ComplexPoly,
    /// `scale[j]` bounds the size of the terms summed into coefficient `j`.
    pub scale: Vec<f64>,
    /// `max_j |q_j| / scale[j]`
    pub relative: f64,
}

impl QReport {
    pub fn max_abs_coeff(&self) -> f64 {
        self.q.max_abs_coeff()
    }
}

pub fn build_q(lp: &LevelPolynomials) -> Result<ComplexPoly> {
    Ok(q_report(lp)?.q)
}

pub fn q_report(lp: &LevelPolynomials) -> Result<QReport> {
    let n = lp.ctype.levels();
    if n < 2 {
        return Err(Error::UnsupportedLevelCount(n));
    }
    let counts = lp.ctype.counts();
    let q = assemble(&lp.polys, counts, false);
    let bound = assemble(&lp.bounds, counts, true);
    let scale: Vec<f64> = bound.coeffs().iter().map(|c| c.norm()).collect();
    let top = scale.iter().copied().fold(0.0, f64::max);
    let mut relative: f64 = 0.0;
    for (j, c) in q.coeffs().iter().enumerate() {
        let s = scale.get(j).copied().unwrap_or(0.0).max(f64::MIN_POSITIVE * top);
        relative = relative.max(c.norm() / s);
    }
    Ok(QReport { q, scale, relative })
}

/// Relative size of Q for a configuration, without requiring distinct points.
pub fn q_residual(c: &Configuration) -> Result<f64> {
    Ok(q_report(&LevelPolynomials::from_points(c))?.relative)
}

/// Balance decided by `Q == 0`, each coefficient compared against the size
/// of the terms that produced it.
pub fn is_balanced_via_q(c: &Configuration, tol: f64) -> Result<bool> {
    let lp = LevelPolynomials::from_configuration(c)?;
    Ok(q_report(&lp)?.relative <= tol)
}

/// Two-level Q multiplied by `n_1^2 n_2^2`:
/// `n2^2 z P1'' P2 + n1^2 z P2'' P1 - 2 n1 n2 z P1' P2' + n2^2 P1' P2 + n1^2 P2' P1`.
pub fn build_q_two_level(p1: &ComplexPoly, p2: &ComplexPoly, n1: usize, n2: usize) -> ComplexPoly {
    let (a, b) = (n1 as f64, n2 as f64);
    let z = ComplexPoly::monomial(real(1.0), 1);
    let (d1, d2) = (p1.derivative(), p2.derivative());
    let terms = [
        &(&(&z * &d1.derivative()) * p2) * (b * b),
        &(&(&z * &d2.derivative()) * p1) * (a * a),
        &(&(&z * &d1) * &d2) * (-2.0 * a * b),
        &(&d1 * p2) * (b * b),
        &(&d2 * p1) * (a * a),
    ];
    terms.iter().fold(ComplexPoly::zero(), |acc, t| &acc + t)
}

/// Q for type `(2,n)` with `P_1 = z^2 - alpha z + 1`:
/// `4(z^3 - alpha z^2 + z) P2'' + 4((1-2n) z^2 + (alpha n - alpha) z + 1) P2' + n^2 (4z - alpha) P2`.
pub fn build_q_2n(alpha: Complex64, p2: &ComplexPoly, n: usize) -> ComplexPoly {
    let nf = n as f64;
    let cubic = ComplexPoly::new(vec![real(0.0), real(4.0), -4.0 * alpha, real(4.0)]);
    let quad = ComplexPoly::new(vec![real(4.0), 4.0 * alpha * (nf - 1.0), real(4.0 * (1.0 - 2.0 * nf))]);
    let lin = ComplexPoly::new(vec![-alpha * nf * nf, real(4.0 * nf * nf)]);
    let d1 = p2.derivative();
    &(&(&cubic * &d1.derivative()) + &(&quad * &d1)) + &(&lin * p2)
}
