//! Type `(2,n)` with `P_1 = z^2 - alpha z + 1`.
//!
//! Requiring `Q = 0` coefficient by coefficient fixes `P_2` from `alpha`
//! through a downward recursion; the constant coefficient is left over as
//! the closing polynomial `b_0(alpha)`, whose roots are the branches.

use num_complex::Complex64;
use num_rational::BigRational;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::exact::{rational, RationalPoly};
use super::{SolutionSet, REASON_COMPLEX_ALPHA, REASON_REPEATED_ROOT, REASON_ZERO_POINT};
use crate::configuration::{ConfigType, Configuration};
use crate::error::{Error, Result};
use crate::polynomial::{ComplexPoly, ROOT_BACKWARD_TOL};
use crate::qbalance::ROOT_SEPARATION_TOL;

/// Branch parameters with a smaller relative imaginary part count as real.
const REAL_ALPHA_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBranch {
    pub alpha: Complex64,
    /// `a_0, ..., a_n`
    pub coeffs: Vec<Complex64>,
    pub p2: ComplexPoly,
    pub valid: bool,
    /// Roots of `z^2 - alpha z + 1`.
    pub level1: Vec<Complex64>,
    /// Roots of `p2`; empty if root finding failed.
    pub level2: Vec<Complex64>,
    pub rejection: Option<&'static str>,
}

impl AlphaBranch {
    pub fn configuration(&self) -> Result<Configuration> {
        Configuration::new(vec![self.level1.clone(), self.level2.clone()])
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidType(format!("(2,n) needs n >= 2, got {n}")));
    }
    Ok(())
}

/// Exact recursion at a rational parameter.
fn recurrence_coeffs_exact(n: usize, x: &BigRational) -> Vec<Complex64> {
    let mut a = vec![BigRational::zero(); n + 1];
    a[n] = rational(1, 1);
    a[n - 1] = x * rational((n * n) as i64, 4);
    for k in (1..n).rev() {
        let w1 = rational((2 * k as i64 - n as i64).pow(2), 1);
        let w2 = rational(4 * ((k + 1) * (k + 1)) as i64, 1);
        let den = rational(4 * ((n + 1 - k) * (n + 1 - k)) as i64, 1);
        a[k - 1] = (x * &a[k] * w1 - &a[k + 1] * w2) / den;
    }
    a.iter()
        .map(|c| Complex64::new(c.to_f64().unwrap_or(f64::NAN), 0.0))
        .collect()
}

fn recurrence_coeffs(n: usize, alpha: Complex64) -> Vec<Complex64> {
    let mut a = vec![Complex64::zero(); n + 1];
    a[n] = Complex64::new(1.0, 0.0);
    a[n - 1] = alpha * (n * n) as f64 / 4.0;
    for k in (1..n).rev() {
        let w1 = ((2 * k) as f64 - n as f64).powi(2);
        let w2 = ((k + 1) * (k + 1)) as f64;
        let den = 4.0 * ((n + 1 - k) * (n + 1 - k)) as f64;
        a[k - 1] = (alpha * a[k] * w1 - a[k + 1] * (4.0 * w2)) / den;
    }
    a
}

/// Roots of `z^2 - alpha z + 1`, larger one first; their product is 1.
fn unit_pair(alpha: Complex64) -> [Complex64; 2] {
    let disc = (alpha * alpha - 4.0).sqrt();
    let plus = (alpha + disc) / 2.0;
    let minus = (alpha - disc) / 2.0;
    let big = if plus.norm() >= minus.norm() { plus } else { minus };
    [big, big.inv()]
}

fn has_close_pair(roots: &[Complex64]) -> bool {
    roots.iter().enumerate().any(|(i, &r)| {
        roots[..i]
            .iter()
            .any(|&s| (r - s).norm() < ROOT_SEPARATION_TOL * r.norm().max(s.norm()).max(1e-300))
    })
}

pub fn coeffs_2n(n: usize, alpha: Complex64) -> Result<AlphaBranch> {
    check_n(n)?;
    let coeffs = match BigRational::from_float(alpha.re) {
        Some(x) if alpha.im == 0.0 => recurrence_coeffs_exact(n, &x),
        _ => recurrence_coeffs(n, alpha),
    };
    Ok(assemble_branch(alpha, coeffs))
}

fn assemble_branch(alpha: Complex64, coeffs: Vec<Complex64>) -> AlphaBranch {
    let p2 = ComplexPoly::new(coeffs.clone());
    let level1 = unit_pair(alpha).to_vec();
    let level2 = p2.roots(ROOT_BACKWARD_TOL).unwrap_or_default();
    let rejection = if level2.is_empty() {
        Some(super::REASON_NONCONVERGENT)
    } else if level2.iter().any(|r| r.norm() == 0.0) {
        Some(REASON_ZERO_POINT)
    } else {
        let all: Vec<Complex64> = level1.iter().chain(&level2).copied().collect();
        has_close_pair(&all).then_some(REASON_REPEATED_ROOT)
    };
    AlphaBranch {
        alpha,
        coeffs,
        p2,
        valid: rejection.is_none(),
        level1,
        level2,
        rejection,
    }
}

/// `A_0(alpha), ..., A_n(alpha)` as exact polynomials in `alpha`.
pub fn symbolic_coeffs_2n(n: usize) -> Result<Vec<RationalPoly>> {
    check_n(n)?;
    let alpha = RationalPoly::var();
    let mut a = vec![RationalPoly::zero(); n + 1];
    a[n] = RationalPoly::from_ints(&[1]);
    a[n - 1] = alpha.scale(&rational((n * n) as i64, 4));
    for k in (1..n).rev() {
        let w1 = rational((2 * k as i64 - n as i64).pow(2), 1);
        let w2 = rational(4 * ((k + 1) * (k + 1)) as i64, 1);
        let den = rational(4 * ((n + 1 - k) * (n + 1 - k)) as i64, 1);
        let num = &(&alpha * &a[k]).scale(&w1) - &a[k + 1].scale(&w2);
        a[k - 1] = num.scale(&den.recip());
    }
    Ok(a)
}

/// `b_0(alpha) = -n^2 alpha A_0(alpha) + 4 A_1(alpha)`, exactly.
pub fn closing_polynomial_2n(n: usize) -> Result<RationalPoly> {
    let a = symbolic_coeffs_2n(n)?;
    let alpha = RationalPoly::var();
    let first = (&alpha * &a[0]).scale(&rational(-((n * n) as i64), 1));
    Ok(&first + &a[1].scale(&rational(4, 1)))
}

/// Bits kept when refining a branch parameter.
const ALPHA_BITS: u32 = 256;

fn round_dyadic(x: &BigRational, bits: u32) -> BigRational {
    let scale = BigRational::from_integer(BigInt::one() << bits);
    (x * &scale).round() / scale
}

/// Refine a real root of the closing polynomial far beyond double
/// precision. The low coefficients of `P_2` are small differences of
/// terms of size `alpha^n`, so they need `alpha` to many more digits than
/// a double carries.
fn refine_alpha(p: &RationalPoly, x0: f64) -> BigRational {
    let dp = p.derivative();
    let Some(mut x) = BigRational::from_float(x0) else {
        return BigRational::zero();
    };
    for _ in 0..8 {
        let d = dp.eval(&x);
        if d.is_zero() {
            break;
        }
        let step = round_dyadic(&(p.eval(&x) / d), ALPHA_BITS);
        if step.is_zero() {
            break;
        }
        let next = round_dyadic(&(&x - &step), ALPHA_BITS);
        if (&next - &x).abs() > BigRational::from_float(1e-6 * (1.0 + x0.abs())).unwrap_or_default() {
            break;
        }
        x = next;
    }
    x
}

fn branch_label(alpha: Complex64) -> String {
    if alpha.im == 0.0 {
        format!("alpha={:.10}", alpha.re)
    } else {
        format!("alpha={:.10}{:+.10}i", alpha.re, alpha.im)
    }
}

/// All branches of the closing polynomial, certified and (optionally)
/// deduplicated. Positive parameters are tried first so they become the
/// representatives.
pub fn solve_2n(n: usize, dedup: bool) -> Result<SolutionSet> {
    check_n(n)?;
    let exact = closing_polynomial_2n(n)?;
    let roots = exact.to_complex().roots(ROOT_BACKWARD_TOL)?;
    let mut real = Vec::new();
    let mut complex = Vec::new();
    for r in roots {
        if r.im.abs() <= REAL_ALPHA_TOL * (1.0 + r.norm()) {
            real.push(refine_alpha(&exact, r.re));
        } else {
            complex.push(r);
        }
    }
    real.sort_by(|a, b| a.is_negative().cmp(&b.is_negative()).then(a.abs().cmp(&b.abs())));
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(b.im.total_cmp(&a.im)));

    let mut set = SolutionSet::new(ConfigType::new(vec![2, n])?, dedup);
    for exact_alpha in real {
        let alpha = Complex64::new(exact_alpha.to_f64().unwrap_or(f64::NAN), 0.0);
        let branch = assemble_branch(alpha, recurrence_coeffs_exact(n, &exact_alpha));
        let label = branch_label(alpha);
        if let Some(reason) = branch.rejection {
            set.reject(label, Some(alpha), None, reason);
            continue;
        }
        set.offer("2n", label, Some(alpha), branch.configuration()?);
    }
    for alpha in complex {
        set.reject(branch_label(alpha), Some(alpha), None, REASON_COMPLEX_ALPHA);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::force_vector;
    use crate::qbalance::build_q_2n;

    fn rp(fracs: &[(i64, i64)]) -> RationalPoly {
        RationalPoly::from_fracs(fracs)
    }

    fn scaled(ints: &[i64], num: i64, den: i64) -> RationalPoly {
        RationalPoly::from_ints(ints).scale(&rational(num, den))
    }

    #[test]
    fn symbolic_tables_small() {
        let a = symbolic_coeffs_2n(4).unwrap();
        assert_eq!(a[4], RationalPoly::from_ints(&[1]));
        assert_eq!(a[3], RationalPoly::from_ints(&[0, 4]));
        assert_eq!(a[2], RationalPoly::from_ints(&[-4, 0, 1]));
        assert_eq!(a[1], RationalPoly::from_ints(&[0, -4]));
        assert_eq!(a[0], rp(&[(1, 1), (0, 1), (-1, 2)]));

        let a = symbolic_coeffs_2n(6).unwrap();
        assert_eq!(a[5], RationalPoly::from_ints(&[0, 9]));
        assert_eq!(a[4], RationalPoly::from_ints(&[-9, 0, 9]));
        assert_eq!(a[3], RationalPoly::from_ints(&[0, -26, 0, 1]));
        assert_eq!(a[2], RationalPoly::from_ints(&[9, 0, -9]));
        assert_eq!(a[1], scaled(&[0, -27, 0, 2], -9, 25));
        assert_eq!(a[0], scaled(&[-25, 0, 52, 0, -2], 1, 25));
    }

    #[test]
    fn numeric_matches_symbolic() {
        for n in 2..=9 {
            let sym = symbolic_coeffs_2n(n).unwrap();
            for alpha in [-3.5, 0.0, 0.7, 12.0] {
                let num = coeffs_2n(n, Complex64::new(alpha, 0.0)).unwrap();
                for (k, s) in sym.iter().enumerate() {
                    let v = s.eval_f64(alpha);
                    assert!((num.coeffs[k].re - v).abs() <= 1e-12 * (1.0 + v.abs()), "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn five_at_zero() {
        let b = coeffs_2n(5, Complex64::new(0.0, 0.0)).unwrap();
        let re: Vec<f64> = b.coeffs.iter().map(|c| c.re).collect();
        assert_eq!(re[4], 0.0);
        assert_eq!(re[3], -25.0 / 4.0);
        assert_eq!(re[2], 0.0);
        assert!((re[1] - 25.0 * 20736.0 / 147456.0).abs() < 1e-14);
        assert_eq!(re[0], 0.0);
        // a_0 = 0 puts a point at the origin
        assert!(!b.valid);
    }

    #[test]
    fn closing_polynomial_four() {
        let b0 = closing_polynomial_2n(4).unwrap();
        assert!(b0.proportional_to(&RationalPoly::from_ints(&[0, -4, 0, 1])));
    }

    #[test]
    fn closing_polynomial_annihilates_q() {
        // on a root of b_0 the assembled Q vanishes
        let n = 6;
        let alpha = Complex64::new(1.0, 0.0);
        let b = coeffs_2n(n, alpha).unwrap();
        let q = build_q_2n(alpha, &b.p2, n);
        assert!(q.max_abs_coeff() < 1e-10);
        let off = coeffs_2n(n, Complex64::new(1.1, 0.0)).unwrap();
        assert!(build_q_2n(Complex64::new(1.1, 0.0), &off.p2, n).max_abs_coeff() > 1e-3);
    }

    #[test]
    fn unit_pair_product() {
        for a in [0.0, 1.0, 2.0, 5.0, -7.5] {
            let [x, y] = unit_pair(Complex64::new(a, 0.0));
            assert!((x * y - 1.0).norm() < 1e-14);
            assert!((x + y - a).norm() < 1e-13 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn four_has_one_branch() {
        let set = solve_2n(4, true).unwrap();
        assert_eq!(set.len(), 1);
        let alpha = set.solutions[0].provenance.alpha.unwrap();
        assert!(alpha.norm() < 1e-10);
        let rejected: Vec<_> = set.branches.iter().filter(|b| !b.status.is_stored()).collect();
        assert_eq!(rejected.len(), 2);
        assert!(rejected.iter().all(|b| b.status.reason() == Some(REASON_REPEATED_ROOT)));
        let cfg = &set.solutions[0].configuration;
        assert!(force_vector(cfg).unwrap().residual < 1e-12);
    }

    #[test]
    fn rejects_small_n() {
        assert!(solve_2n(1, true).is_err());
        assert!(coeffs_2n(1, Complex64::new(0.0, 0.0)).is_err());
    }
}
