//! Type `(3,4)` with `p_1(1) = 0`.
//!
//! `p_1 = z^3 + (a_1 - 1) z^2 - (a_1 + a_0) z + a_0` and
//! `p_2 = z^4 + b_3 z^3 + b_2 z^2 + b_1 z + b_0`. The top four coefficients
//! of `Q` are linear in the `b`'s and eliminate them, leaving two equations
//! in `(a_0, a_1)` that are solved by multi-start Newton.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SolutionSet, DEFAULT_SEED, REASON_REPEATED_ROOT, REASON_ZERO_POINT};
use crate::configuration::{ConfigType, Configuration};
use crate::error::{Error, Result};
use crate::polynomial::{ComplexPoly, ROOT_BACKWARD_TOL};
use crate::qbalance::ROOT_SEPARATION_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solve34Options {
    pub seed: u64,
    /// Grid points per axis on `[-radius, radius]^2`.
    pub grid: usize,
    pub radius: f64,
    pub random_starts: usize,
    pub cluster_tol: f64,
    pub dedup: bool,
}

impl Default for Solve34Options {
    fn default() -> Self {
        Solve34Options {
            seed: DEFAULT_SEED,
            grid: 41,
            radius: 50.0,
            random_starts: 200,
            cluster_tol: 1e-6,
            dedup: true,
        }
    }
}

const MAX_NEWTON_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;

trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn constant(x: f64) -> Self;
}

impl Scalar for Complex64 {
    fn constant(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// A value with its gradient in `(a_0, a_1)`.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: Complex64,
    d: [Complex64; 2],
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            d: [self.d[0] - o.d[0], self.d[1] - o.d[1]],
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            d: [self.d[0] * o.v + self.v * o.d[0], self.d[1] * o.v + self.v * o.d[1]],
        }
    }
}

impl Scalar for Dual {
    fn constant(x: f64) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Dual {
            v: Complex64::new(x, 0.0),
            d: [zero, zero],
        }
    }
}

fn k<T: Scalar>(x: f64) -> T {
    T::constant(x)
}

fn c_generic<T: Scalar>(a0: T, a1: T, b0: T, b1: T, b2: T, b3: T) -> [T; 6] {
    [
        k::<T>(-16.0) * a0 * b0 - k::<T>(16.0) * a1 * b0 + k::<T>(9.0) * a0 * b1,
        k::<T>(-64.0) * b0 + k::<T>(64.0) * a1 * b0 - a0 * b1 - a1 * b1 + k::<T>(36.0) * a0 * b2,
        k::<T>(144.0) * b0 - k::<T>(25.0) * b1 + k::<T>(25.0) * a1 * b1 - k::<T>(4.0) * a0 * b2
            - k::<T>(4.0) * a1 * b2
            + k::<T>(81.0) * a0 * b3,
        k::<T>(144.0) * a0 + k::<T>(81.0) * b1 - k::<T>(4.0) * b2 + k::<T>(4.0) * a1 * b2
            - k::<T>(25.0) * a0 * b3
            - k::<T>(25.0) * a1 * b3,
        k::<T>(-64.0) * a0 - k::<T>(64.0) * a1 + k::<T>(36.0) * b2 - b3 + a1 * b3,
        k::<T>(-16.0) + k::<T>(16.0) * a1 + k::<T>(9.0) * b3,
    ]
}

/// `[b_0, b_1, b_2, b_3]` solving `c_5 = c_4 = c_3 = c_2 = 0`.
fn b_generic<T: Scalar>(a0: T, a1: T) -> [T; 4] {
    let one = k::<T>(1.0);
    let a1_2 = a1 * a1;
    let a1_3 = a1_2 * a1;
    let b3 = k::<T>(16.0 / 9.0) * (one - a1);
    let b2 = k::<T>(4.0 / 81.0) * (one + k::<T>(36.0) * a0 + k::<T>(34.0) * a1 + a1_2);
    let b1 = k::<T>(16.0 / 6561.0)
        * (one - k::<T>(468.0) * a0 + k::<T>(258.0) * a1 - k::<T>(261.0) * a0 * a1 - k::<T>(258.0) * a1_2 - a1_3);
    let b0 = k::<T>(1.0 / 59049.0)
        * (k::<T>(25.0) - k::<T>(70668.0) * a0 + k::<T>(2916.0) * a0 * a0 + k::<T>(6506.0) * a1
            + k::<T>(69894.0) * a0 * a1
            - k::<T>(10146.0) * a1_2
            + k::<T>(6606.0) * a0 * a1_2
            + k::<T>(6506.0) * a1_3
            + k::<T>(25.0) * a1_2 * a1_2);
    [b0, b1, b2, b3]
}

/// The six coefficients `c_0, ..., c_5` of `Q` for the `(3,4)` ansatz.
pub fn c_coefficients_34(
    a0: Complex64,
    a1: Complex64,
    b0: Complex64,
    b1: Complex64,
    b2: Complex64,
    b3: Complex64,
) -> [Complex64; 6] {
    c_generic(a0, a1, b0, b1, b2, b3)
}

/// `[b_0, b_1, b_2, b_3]` after eliminating `c_5, ..., c_2`.
pub fn substituted_b(a0: Complex64, a1: Complex64) -> [Complex64; 4] {
    b_generic(a0, a1)
}

pub fn level_polynomials_34(a0: Complex64, a1: Complex64) -> (ComplexPoly, ComplexPoly) {
    let one = Complex64::new(1.0, 0.0);
    let p1 = ComplexPoly::new(vec![a0, -(a1 + a0), a1 - one, one]);
    let [b0, b1, b2, b3] = substituted_b(a0, a1);
    let p2 = ComplexPoly::new(vec![b0, b1, b2, b3, one]);
    (p1, p2)
}

/// `(c_0, c_1)` and their Jacobian after substitution.
fn reduced_system(x: [Complex64; 2]) -> ([Complex64; 2], [[Complex64; 2]; 2]) {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let a0 = Dual { v: x[0], d: [one, zero] };
    let a1 = Dual { v: x[1], d: [zero, one] };
    let [b0, b1, b2, b3] = b_generic(a0, a1);
    let c = c_generic(a0, a1, b0, b1, b2, b3);
    ([c[0].v, c[1].v], [c[0].d, c[1].d])
}

fn size(c: [Complex64; 2]) -> f64 {
    c[0].norm().max(c[1].norm())
}

/// Damped Newton on `c_0 = c_1 = 0`; `None` if it stalls.
fn newton_34(start: [Complex64; 2]) -> Option<[Complex64; 2]> {
    let mut x = start;
    let (mut c, mut jac) = reduced_system(x);
    for _ in 0..MAX_NEWTON_ITER {
        if size(c) == 0.0 {
            return Some(x);
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.norm() == 0.0 || !det.is_finite() {
            return None;
        }
        let step = [
            -(jac[1][1] * c[0] - jac[0][1] * c[1]) / det,
            -(jac[0][0] * c[1] - jac[1][0] * c[0]) / det,
        ];
        let small = step[0].norm().max(step[1].norm()) <= 1e-13 * (1.0 + x[0].norm().max(x[1].norm()));
        let mut lambda = 1.0;
        let mut moved = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = [x[0] + step[0] * lambda, x[1] + step[1] * lambda];
            let (cc, cj) = reduced_system(cand);
            if size(cc) < size(c) {
                x = cand;
                c = cc;
                jac = cj;
                moved = true;
                break;
            }
            lambda /= 2.0;
        }
        if small {
            return Some(x);
        }
        if !moved {
            return None;
        }
    }
    None
}

fn starts(opts: &Solve34Options) -> Vec<[Complex64; 2]> {
    let mut out = Vec::with_capacity(opts.grid * opts.grid + opts.random_starts);
    let step = if opts.grid > 1 { 2.0 * opts.radius / (opts.grid - 1) as f64 } else { 0.0 };
    for i in 0..opts.grid {
        for j in 0..opts.grid {
            let a0 = -opts.radius + step * i as f64;
            let a1 = -opts.radius + step * j as f64;
            out.push([Complex64::new(a0, 0.0), Complex64::new(a1, 0.0)]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        let mut draw = || Complex64::from_polar(opts.radius * rng.random::<f64>().sqrt(), rng.random_range(-PI..PI));
        out.push([draw(), draw()]);
    }
    out
}

fn cluster(roots: Vec<[Complex64; 2]>, tol: f64) -> Vec<[Complex64; 2]> {
    let mut reps: Vec<[Complex64; 2]> = Vec::new();
    for r in roots {
        let close = reps.iter().any(|s| {
            let scale = 1.0 + r[0].norm().max(r[1].norm());
            (r[0] - s[0]).norm().max((r[1] - s[1]).norm()) <= tol * scale
        });
        if !close {
            reps.push(r);
        }
    }
    reps
}

fn clean(z: Complex64) -> Complex64 {
    if z.im.abs() <= 1e-12 * (1.0 + z.re.abs()) {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

fn fmt_c(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{:.8}", z.re)
    } else {
        format!("{:.8}{:+.8}i", z.re, z.im)
    }
}

/// Roots of the two level polynomials, or the reason they are unusable.
fn levels_34(a0: Complex64, a1: Complex64) -> std::result::Result<Vec<Vec<Complex64>>, &'static str> {
    let (p1, p2) = level_polynomials_34(a0, a1);
    let (Ok(r1), Ok(r2)) = (p1.roots(ROOT_BACKWARD_TOL), p2.roots(ROOT_BACKWARD_TOL)) else {
        return Err(super::REASON_NONCONVERGENT);
    };
    let all: Vec<Complex64> = r1.iter().chain(&r2).copied().collect();
    if all.iter().any(|r| r.norm() == 0.0) {
        return Err(REASON_ZERO_POINT);
    }
    for (i, &r) in all.iter().enumerate() {
        if all[..i]
            .iter()
            .any(|&s| (r - s).norm() < ROOT_SEPARATION_TOL * r.norm().max(s.norm()))
        {
            return Err(REASON_REPEATED_ROOT);
        }
    }
    Ok(vec![r1, r2])
}

pub fn solve_34(opts: &Solve34Options) -> Result<SolutionSet> {
    let converged: Vec<[Complex64; 2]> = starts(opts).into_iter().filter_map(newton_34).collect();
    if converged.is_empty() {
        return Err(Error::NoSolutionsFound);
    }
    let mut reps: Vec<[Complex64; 2]> = cluster(converged, opts.cluster_tol)
        .into_iter()
        .map(|[a0, a1]| [clean(a0), clean(a1)])
        .collect();
    // small parameters give the best-conditioned representatives
    reps.sort_by(|x, y| {
        let key = |r: &[Complex64; 2]| r[0].norm().max(r[1].norm());
        key(x).total_cmp(&key(y))
    });

    let mut set = SolutionSet::new(ConfigType::new(vec![3, 4])?, opts.dedup);
    for [a0, a1] in reps {
        let label = format!("a0={},a1={}", fmt_c(a0), fmt_c(a1));
        match levels_34(a0, a1) {
            Ok(levels) => {
                set.offer("34", label, None, Configuration::new(levels)?);
            }
            Err(reason) => set.reject(label, None, None, reason),
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qbalance::build_q_two_level;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn c5_vanishes_at_a1_one() {
        let z = c(0.0, 0.0);
        let cs = c_coefficients_34(c(0.3, 0.0), c(1.0, 0.0), z, z, z, z);
        assert_eq!(cs[5], z);
    }

    #[test]
    fn substitution_at_a1_one() {
        let [b0, b1, b2, b3] = substituted_b(c(0.0, 0.0), c(1.0, 0.0));
        assert_eq!(b3, c(0.0, 0.0));
        assert!((b2 - c(4.0 * 36.0 / 81.0, 0.0)).norm() < 1e-15);
        assert!(b1.norm() < 1e-15);
        let b0_exact = (25.0 + 6506.0 - 10146.0 + 6506.0 + 25.0) / 59049.0;
        assert!((b0 - c(b0_exact, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dual_gradient_matches_differences() {
        let x = [c(0.7, -0.2), c(-1.3, 0.4)];
        let (_, jac) = reduced_system(x);
        let h = 1e-6;
        for v in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[v] += h;
            xm[v] -= h;
            let (cp, _) = reduced_system(xp);
            let (cm, _) = reduced_system(xm);
            for e in 0..2 {
                let fd = (cp[e] - cm[e]) / (2.0 * h);
                assert!((fd - jac[e][v]).norm() <= 1e-6 * (1.0 + fd.norm()));
            }
        }
    }

    proptest! {
        #[test]
        fn substitution_annihilates_top_coefficients(
            a0r in -50.0..50.0f64, a0i in -50.0..50.0f64,
            a1r in -50.0..50.0f64, a1i in -50.0..50.0f64,
        ) {
            let (a0, a1) = (c(a0r, a0i), c(a1r, a1i));
            let [b0, b1, b2, b3] = substituted_b(a0, a1);
            let cs = c_coefficients_34(a0, a1, b0, b1, b2, b3);
            // scale of the individual terms in each coefficient
            let m = 1.0 + a0.norm().max(a1.norm());
            for (i, ci) in cs.iter().enumerate().skip(2) {
                prop_assert!(ci.norm() <= 1e-12 * m.powi(5), "c{} = {}", i, ci);
            }
        }

        #[test]
        fn c_coefficients_are_q(
            a0r in -3.0..3.0f64, a0i in -3.0..3.0f64,
            a1r in -3.0..3.0f64, a1i in -3.0..3.0f64,
            b in proptest::collection::vec(-3.0..3.0f64, 8),
        ) {
            // the printed c_k are the coefficients of the two-level Q
            let (a0, a1) = (c(a0r, a0i), c(a1r, a1i));
            let bs = [c(b[0], b[1]), c(b[2], b[3]), c(b[4], b[5]), c(b[6], b[7])];
            let one = c(1.0, 0.0);
            let p1 = ComplexPoly::new(vec![a0, -(a1 + a0), a1 - one, one]);
            let p2 = ComplexPoly::new(vec![bs[0], bs[1], bs[2], bs[3], one]);
            let q = build_q_two_level(&p1, &p2, 3, 4);
            let cs = c_coefficients_34(a0, a1, bs[0], bs[1], bs[2], bs[3]);
            for (i, ci) in cs.iter().enumerate() {
                prop_assert!((q.coeff(i) - ci).norm() <= 1e-12 * (1.0 + ci.norm()), "k={} {} vs {}", i, q.coeff(i), ci);
            }
            prop_assert!(q.coeff(6).norm() <= 1e-12);
        }
    }
}
