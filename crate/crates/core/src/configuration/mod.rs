//! Point configurations on a cyclic stack of punctured planes.
//!
//! A configuration of type `(n_1, ..., n_N)` places `n_k` nonzero complex
//! points on level `k`. Levels are indexed cyclically, so level `k + N` is
//! level `k`. Points are multiplicative coordinates; the neck positions on
//! the cylinder are their logarithms (see [`node_locations`]).

mod forces;
mod symmetry;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use forces::{
    check_diagonal_dominance, complex_rank, force, force_vector, has_real_sign_pattern, is_balanced,
    is_nondegenerate, jacobian, log_jacobian, nondegeneracy, ForceVector, Nondegeneracy,
};
pub use symmetry::{equivalent, rotational_reduction, transform, Reduction, Symmetry};

/// Relative separation below which two points count as coincident.
pub const DISTINCTNESS_TOL: f64 = 1e-10;

/// The level structure `(n_1, ..., n_N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfigType {
    counts: Vec<usize>,
}

impl ConfigType {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidType("at least one level is required".into()));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidType("every level needs at least one point".into()));
        }
        Ok(ConfigType { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Number of levels `N`.
    pub fn levels(&self) -> usize {
        self.counts.len()
    }

    /// Point count on a cyclically indexed level.
    pub fn count(&self, k: isize) -> usize {
        self.counts[self.wrap(k)]
    }

    pub fn wrap(&self, k: isize) -> usize {
        k.rem_euclid(self.counts.len() as isize) as usize
    }

    /// Total number of points `m`.
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Surfaces are only constructed for an even number of levels.
    /// Odd `N` is accepted for experimentation.
    pub fn has_even_levels(&self) -> bool {
        self.counts.len().is_multiple_of(2)
    }

    /// Genus of the quotient surface, `1 + sum (n_k - 1)`.
    pub fn genus(&self) -> usize {
        1 + self.counts.iter().map(|n| n - 1).sum::<usize>()
    }

    /// Start of each level in level-major flat order.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.counts.len());
        let mut acc = 0;
        for &n in &self.counts {
            out.push(acc);
            acc += n;
        }
        out
    }
}

impl fmt::Display for ConfigType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, n) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

pub fn genus(t: &ConfigType) -> usize {
    t.genus()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    ctype: ConfigType,
    points: Vec<Vec<Complex64>>,
}

impl Configuration {
    pub fn new(points: Vec<Vec<Complex64>>) -> Result<Self> {
        let ctype = ConfigType::new(points.iter().map(Vec::len).collect())?;
        for (k, level) in points.iter().enumerate() {
            for (i, p) in level.iter().enumerate() {
                if !p.is_finite() {
                    return Err(Error::InvalidConfiguration(format!(
                        "point p[{},{}] is not finite",
                        k + 1,
                        i + 1
                    )));
                }
                if p.norm() == 0.0 {
                    return Err(Error::InvalidConfiguration(format!(
                        "point p[{},{}] is zero",
                        k + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Configuration { ctype, points })
    }

    /// Build from points in level-major order.
    pub fn from_flat(ctype: &ConfigType, flat: &[Complex64]) -> Result<Self> {
        if flat.len() != ctype.total() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} points, got {}",
                ctype.total(),
                flat.len()
            )));
        }
        let mut points = Vec::with_capacity(ctype.levels());
        let mut rest = flat;
        for &n in ctype.counts() {
            let (head, tail) = rest.split_at(n);
            points.push(head.to_vec());
            rest = tail;
        }
        Self::new(points)
    }

    pub fn ctype(&self) -> &ConfigType {
        &self.ctype
    }

    pub fn points(&self) -> &[Vec<Complex64>] {
        &self.points
    }

    /// Points of a cyclically indexed level.
    pub fn level(&self, k: isize) -> &[Complex64] {
        &self.points[self.ctype.wrap(k)]
    }

    pub fn flat(&self) -> Vec<Complex64> {
        self.points.iter().flatten().copied().collect()
    }

    /// Apply `f` to every point.
    pub fn map_points(&self, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        Self::new(
            self.points
                .iter()
                .map(|l| l.iter().map(|&p| f(p)).collect())
                .collect(),
        )
    }

    /// First pair of points that enter a common force term (same or
    /// adjacent level) and are closer than the distinctness tolerance.
    pub fn interacting_collision(&self) -> Option<Error> {
        let n = self.ctype.levels();
        for k in 0..n {
            let neighbours: &[usize] = if n == 1 { &[0] } else { &[0, 1] };
            for &dk in neighbours {
                let k2 = (k + dk) % n;
                if let Some(e) = self.collision_between(k, k2) {
                    return Some(e);
                }
            }
        }
        None
    }

    /// First coincident pair anywhere in the configuration.
    pub fn global_collision(&self) -> Option<Error> {
        let n = self.ctype.levels();
        for k in 0..n {
            for k2 in k..n {
                if let Some(e) = self.collision_between(k, k2) {
                    return Some(e);
                }
            }
        }
        None
    }

    fn collision_between(&self, k: usize, k2: usize) -> Option<Error> {
        for (i, &p) in self.points[k].iter().enumerate() {
            for (j, &q) in self.points[k2].iter().enumerate() {
                if k == k2 && j <= i {
                    continue;
                }
                if points_coincide(p, q) {
                    return Some(Error::CollidingPoints {
                        level: k,
                        index: i,
                        other_level: k2,
                        other_index: j,
                    });
                }
            }
        }
        None
    }
}

pub fn points_coincide(p: Complex64, q: Complex64) -> bool {
    (p - q).norm() < DISTINCTNESS_TOL * 1f64.max(p.norm()).max(q.norm())
}

/// Neck positions `log p` on the cylinder, imaginary parts in `(-pi, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLocations {
    pub locations: Vec<Vec<Complex64>>,
}

/// Principal logarithm with the imaginary part normalized into `(-pi, pi]`.
pub fn log_node(p: Complex64) -> Complex64 {
    let mut z = p.ln();
    if z.im <= -PI {
        z.im += 2.0 * PI;
    }
    z
}

pub fn node_locations(c: &Configuration) -> NodeLocations {
    NodeLocations {
        locations: c
            .points()
            .iter()
            .map(|l| l.iter().map(|&p| log_node(p)).collect())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn type_validation() {
        assert!(ConfigType::new(vec![]).is_err());
        assert!(ConfigType::new(vec![1, 0]).is_err());
        let t = ConfigType::new(vec![2, 5, 3]).unwrap();
        assert_eq!(t.total(), 10);
        assert!(!t.has_even_levels());
        assert_eq!(t.count(3), 2);
        assert_eq!(t.count(-1), 3);
        assert_eq!(t.offsets(), vec![0, 2, 7]);
        assert_eq!(t.to_string(), "(2,5,3)");
    }

    #[test]
    fn genus_examples() {
        assert_eq!(ConfigType::new(vec![1, 8]).unwrap().genus(), 8);
        assert_eq!(ConfigType::new(vec![1, 1]).unwrap().genus(), 1);
        assert_eq!(genus(&ConfigType::new(vec![2, 13]).unwrap()), 14);
    }

    #[test]
    fn rejects_zero_points() {
        assert!(Configuration::new(vec![vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]]).is_err());
        assert!(Configuration::new(vec![vec![c(f64::NAN, 0.0)], vec![c(1.0, 0.0)]]).is_err());
    }

    #[test]
    fn cyclic_levels() {
        let cfg = Configuration::new(vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0), c(2.0, 0.0)]]).unwrap();
        assert_eq!(cfg.level(2), cfg.level(0));
        assert_eq!(cfg.level(-1), cfg.level(1));
        let back = Configuration::from_flat(cfg.ctype(), &cfg.flat()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn collisions() {
        let cfg = Configuration::new(vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0), c(-1.0, 0.0)]]).unwrap();
        assert!(matches!(
            cfg.interacting_collision(),
            Some(Error::CollidingPoints { level: 1, index: 0, other_level: 1, other_index: 1 })
        ));
        // equal points on non-adjacent levels do not interact
        let cfg = Configuration::new(vec![
            vec![c(1.0, 0.0)],
            vec![c(-1.0, 0.0)],
            vec![c(1.0, 0.0)],
            vec![c(-1.0, 0.0)],
        ])
        .unwrap();
        assert!(cfg.interacting_collision().is_none());
        assert!(cfg.global_collision().is_some());
    }

    #[test]
    fn node_location_examples() {
        assert_eq!(log_node(c(1.0, 0.0)), c(0.0, 0.0));
        // log(-1) lands on +pi regardless of the sign of zero
        assert!((log_node(c(-1.0, -0.0)).im - PI).abs() < 1e-15);
        assert!((log_node(c(-1.0, 0.0)).im - PI).abs() < 1e-15);

        let s = 3f64.sqrt();
        let cfg = Configuration::new(vec![vec![c(1.0, 0.0)], vec![c(-2.0 + s, 0.0), c(-2.0 - s, 0.0)]]).unwrap();
        let nodes = node_locations(&cfg);
        assert_eq!(nodes.locations[0][0], c(0.0, 0.0));
        assert!((nodes.locations[1][0] - c((2.0 - s).ln(), PI)).norm() < 1e-14);
        assert!((nodes.locations[1][1] - c((2.0 + s).ln(), PI)).norm() < 1e-14);
        for (l, level) in nodes.locations.iter().enumerate() {
            for (i, z) in level.iter().enumerate() {
                let p = cfg.points()[l][i];
                assert!((z.exp() - p).norm() <= 1e-12 * p.norm());
            }
        }
    }
}
