//! Transformations that preserve balance, and equivalence modulo them.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::Configuration;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symmetry {
    /// `p -> -p`; a half-turn of the cylinder.
    Negate,
    /// `p -> conj(p)`
    Conjugate,
    /// `p -> 1/p` with the level order reversed.
    Invert,
    /// New level `k` is old level `k + s`.
    Shift(isize),
    /// `p -> lambda p`, `lambda != 0`.
    Scale(Complex64),
}

pub fn transform(c: &Configuration, t: Symmetry) -> Result<Configuration> {
    match t {
        Symmetry::Negate => c.map_points(|p| -p),
        Symmetry::Conjugate => c.map_points(|p| p.conj()),
        Symmetry::Invert => {
            let mut levels: Vec<Vec<Complex64>> = c
                .points()
                .iter()
                .map(|l| l.iter().map(|p| p.inv()).collect())
                .collect();
            levels.reverse();
            Configuration::new(levels)
        }
        Symmetry::Shift(s) => {
            let mut levels = c.points().to_vec();
            let n = levels.len();
            levels.rotate_left(s.rem_euclid(n as isize) as usize);
            Configuration::new(levels)
        }
        Symmetry::Scale(lambda) => {
            if lambda.norm() == 0.0 || !lambda.is_finite() {
                return Err(Error::InvalidConfiguration("scale factor must be finite and nonzero".into()));
            }
            c.map_points(|p| lambda * p)
        }
    }
}

fn near(x: Complex64, y: Complex64, tol: f64) -> bool {
    (x - y).norm() <= tol * x.norm().max(y.norm())
}

/// Greedy multiset comparison with relative tolerance.
fn same_multiset(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for &x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .min_by(|p, q| (x - *p.1).norm().total_cmp(&(x - *q.1).norm()));
        match best {
            Some((j, &y)) if near(x, y, tol) => used[j] = true,
            _ => return false,
        }
    }
    true
}

/// Whether some global rescaling maps `a` onto `b` level by level.
fn aligned_by_scale(a: &Configuration, b: &Configuration, tol: f64) -> bool {
    if a.ctype() != b.ctype() {
        return false;
    }
    // anchor on the smallest level to keep the candidate list short
    let anchor_level = (0..a.ctype().levels())
        .min_by_key(|&k| a.ctype().counts()[k])
        .expect("at least one level");
    let anchor = a.points()[anchor_level][0];
    b.points()[anchor_level].iter().any(|&target| {
        let lambda = target / anchor;
        a.points().iter().zip(b.points()).all(|(la, lb)| {
            let scaled: Vec<Complex64> = la.iter().map(|&p| lambda * p).collect();
            same_multiset(&scaled, lb, tol)
        })
    })
}

/// Equivalence modulo per-level permutations, global rescaling (which
/// covers negation), conjugation, inversion with level reversal, and
/// cyclic level shifts.
pub fn equivalent(a: &Configuration, b: &Configuration, tol: f64) -> bool {
    let n = a.ctype().levels();
    if n != b.ctype().levels() || a.ctype().total() != b.ctype().total() {
        return false;
    }
    for conj in [false, true] {
        for inv in [false, true] {
            let mut base = a.clone();
            if conj {
                base = transform(&base, Symmetry::Conjugate).expect("conjugation keeps points nonzero");
            }
            if inv {
                // 1/p can overflow or underflow for extreme points
                match transform(&base, Symmetry::Invert) {
                    Ok(t) => base = t,
                    Err(_) => continue,
                }
            }
            for s in 0..n {
                let t = transform(&base, Symmetry::Shift(s as isize)).expect("shift is a permutation");
                if aligned_by_scale(&t, b, tol) {
                    return true;
                }
            }
        }
    }
    false
}

/// A configuration invariant under `p -> zeta p` for a primitive `d`-th root
/// of unity `zeta`, pushed through `p -> p^d` to a configuration of type
/// `(n_1/d, ..., n_N/d)`. Forces transform as `F = F'/d`, so the image is
/// balanced exactly when the original is.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub factor: usize,
    pub configuration: Configuration,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest rotational symmetry of `c`, if any.
pub fn rotational_reduction(c: &Configuration, tol: f64) -> Option<Reduction> {
    let g = c.ctype().counts().iter().fold(0usize, |acc, &n| gcd(acc, n));
    for d in (2..=g).rev() {
        if g % d != 0 {
            continue;
        }
        let zeta = Complex64::from_polar(1.0, 2.0 * PI / d as f64);
        let invariant = c.points().iter().all(|level| {
            let rotated: Vec<Complex64> = level.iter().map(|&p| zeta * p).collect();
            same_multiset(&rotated, level, tol)
        });
        if !invariant {
            continue;
        }
        let mut reduced = Vec::with_capacity(c.ctype().levels());
        for level in c.points() {
            let mut images: Vec<Complex64> = Vec::new();
            for &p in level {
                let w = p.powu(d as u32);
                if !images.iter().any(|&q| near(q, w, tol.sqrt())) {
                    images.push(w);
                }
            }
            if images.len() * d != level.len() {
                return None;
            }
            reduced.push(images);
        }
        if let Ok(configuration) = Configuration::new(reduced) {
            return Some(Reduction { factor: d, configuration });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::{force_vector, ForceVector};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_two() -> Configuration {
        let s = 3f64.sqrt();
        Configuration::new(vec![vec![c(1.0, 0.0)], vec![c(-2.0 + s, 0.0), c(-2.0 - s, 0.0)]]).unwrap()
    }

    fn scrambled() -> Configuration {
        Configuration::new(vec![
            vec![c(1.0, 0.2), c(-0.4, 1.1)],
            vec![c(2.0, -0.7), c(-1.5, -0.3), c(0.3, 0.9)],
        ])
        .unwrap()
    }

    fn max_diff(a: &ForceVector, b: &ForceVector) -> f64 {
        a.flat().iter().zip(b.flat()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn negation_keeps_balance() {
        let s = 3f64.sqrt();
        let neg = transform(&one_two(), Symmetry::Negate).unwrap();
        assert_eq!(neg.points()[0], vec![c(-1.0, -0.0)]);
        assert!((neg.points()[1][0] - c(2.0 - s, 0.0)).norm() < 1e-15);
        assert!((neg.points()[1][1] - c(2.0 + s, 0.0)).norm() < 1e-15);
        assert!(force_vector(&neg).unwrap().residual < 1e-12);
    }

    #[test]
    fn scaling_leaves_forces_unchanged() {
        let cfg = scrambled();
        let f0 = force_vector(&cfg).unwrap();
        let f1 = force_vector(&transform(&cfg, Symmetry::Scale(c(3.0, 0.0))).unwrap()).unwrap();
        assert!(max_diff(&f0, &f1) < 1e-12);
    }

    #[test]
    fn full_shift_is_identity() {
        let cfg = scrambled();
        assert_eq!(transform(&cfg, Symmetry::Shift(2)).unwrap(), cfg);
        assert_eq!(transform(&cfg, Symmetry::Shift(-4)).unwrap(), cfg);
    }

    #[test]
    fn residual_preserved_by_generators() {
        let cfg = scrambled();
        let r = force_vector(&cfg).unwrap().residual;
        for t in [Symmetry::Negate, Symmetry::Conjugate, Symmetry::Invert, Symmetry::Shift(1)] {
            let r2 = force_vector(&transform(&cfg, t).unwrap()).unwrap().residual;
            assert!((r - r2).abs() <= 1e-12 * r, "{t:?}");
        }
        assert!(transform(&cfg, Symmetry::Scale(c(0.0, 0.0))).is_err());
    }

    #[test]
    fn equivalence_cases() {
        let cfg = scrambled();
        assert!(equivalent(&cfg, &cfg, 1e-10));
        let mut permuted = cfg.points().to_vec();
        permuted[1].reverse();
        assert!(equivalent(&cfg, &Configuration::new(permuted).unwrap(), 1e-10));
        let moved = transform(
            &transform(&transform(&cfg, Symmetry::Invert).unwrap(), Symmetry::Scale(c(0.3, -2.0))).unwrap(),
            Symmetry::Conjugate,
        )
        .unwrap();
        assert!(equivalent(&cfg, &moved, 1e-10));
        assert!(equivalent(&moved, &cfg, 1e-10));

        let mut nudged = cfg.points().to_vec();
        nudged[0][0] += c(1e-3, 0.0);
        assert!(!equivalent(&cfg, &Configuration::new(nudged).unwrap(), 1e-8));
        assert!(!equivalent(&cfg, &one_two(), 1e-8));
    }

    #[test]
    fn reduction_by_squaring() {
        // the (2,4) solution at alpha = 0 folds onto the (1,2) solution
        let s = 3f64.sqrt();
        let a = (2.0 - s).sqrt();
        let b = (2.0 + s).sqrt();
        let cfg = Configuration::new(vec![
            vec![c(0.0, 1.0), c(0.0, -1.0)],
            vec![c(a, 0.0), c(-a, 0.0), c(b, 0.0), c(-b, 0.0)],
        ])
        .unwrap();
        let red = rotational_reduction(&cfg, 1e-8).unwrap();
        assert_eq!(red.factor, 2);
        assert_eq!(red.configuration.ctype().counts(), &[1, 2]);
        assert!(equivalent(&red.configuration, &one_two(), 1e-8));
        assert!(rotational_reduction(&one_two(), 1e-8).is_none());
        assert!(rotational_reduction(&scrambled(), 1e-8).is_none());
    }
}
