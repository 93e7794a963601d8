//! Damped Newton iteration on the force equations of an arbitrary type.
//!
//! The first point of level 1 is pinned to 1 and the last force equation
//! is dropped, leaving a square `(m-1) x (m-1)` system. Steps are taken in
//! `log p`, which keeps the columns comparable when the points spread over
//! many orders of magnitude.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SOLUTION_TOL;
use crate::configuration::{force_vector, log_jacobian, ConfigType, Configuration};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 50,
            tol: 1e-11,
            max_halvings: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub configuration: Configuration,
    pub iterations: usize,
    pub residual: f64,
}

struct Outcome {
    best: Configuration,
    residual: f64,
    iterations: usize,
    converged: bool,
    collided: Option<Error>,
}

/// Longest allowed step in `log p`.
const MAX_LOG_STEP: f64 = 2.0;
/// Iterates with `|log |p||` beyond this are escaping to 0 or infinity,
/// where every force term tends to a constant.
const MAX_LOG_MODULUS: f64 = 200.0;

/// Residual of a trial point, or the collision that prevents evaluating it.
fn trial(ctype: &ConfigType, flat: &[Complex64]) -> std::result::Result<(Configuration, f64), Option<Error>> {
    if flat.iter().any(|p| !p.is_finite() || p.norm().ln().abs() > MAX_LOG_MODULUS) {
        return Err(None);
    }
    let c = Configuration::from_flat(ctype, flat).map_err(|_| None)?;
    match force_vector(&c) {
        Ok(fv) if fv.residual.is_finite() => Ok((c, fv.residual)),
        Ok(_) => Err(None),
        Err(e @ Error::CollidingPoints { .. }) => Err(Some(e)),
        Err(_) => Err(None),
    }
}

fn iterate(seed: &Configuration, opts: &NewtonOptions) -> Result<Outcome> {
    if let Some(e) = seed.interacting_collision() {
        return Err(e);
    }
    let ctype = seed.ctype().clone();
    let m = ctype.total();
    let pin = seed.points()[0][0];
    let mut x = seed.map_points(|p| p / pin)?;
    let mut fv = force_vector(&x)?;
    let mut iterations = 0;
    let mut collided = None;
    while fv.residual >= opts.tol && iterations < opts.max_iter && m > 1 {
        let jac = log_jacobian(&x)?.without(m - 1, 0);
        let rhs: Vec<Complex64> = fv.flat()[..m - 1].iter().map(|f| -f).collect();
        let Ok(mut step) = jac.solve(&rhs) else {
            break;
        };
        let longest = step.iter().map(|d| d.norm()).fold(0.0, f64::max);
        if longest > MAX_LOG_STEP {
            step.iter_mut().for_each(|d| *d *= MAX_LOG_STEP / longest);
        }
        let base = x.flat();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut cand = base.clone();
            for (v, d) in cand[1..].iter_mut().zip(&step) {
                *v *= (lambda * d).exp();
            }
            match trial(&ctype, &cand) {
                Ok((c, r)) if r < fv.residual => {
                    accepted = Some(c);
                    break;
                }
                Ok(_) => {}
                Err(e) => collided = e.or(collided),
            }
            lambda /= 2.0;
        }
        let Some(next) = accepted else {
            break;
        };
        x = next;
        fv = force_vector(&x)?;
        iterations += 1;
    }
    Ok(Outcome {
        converged: fv.residual < opts.tol,
        residual: fv.residual,
        best: x,
        iterations,
        collided,
    })
}

/// Newton from `seed`. The returned configuration has `p[1,1] = 1`.
pub fn solve_general(seed: &Configuration, opts: &NewtonOptions) -> Result<NewtonReport> {
    let out = iterate(seed, opts)?;
    if out.converged {
        return Ok(NewtonReport {
            configuration: out.best,
            iterations: out.iterations,
            residual: out.residual,
        });
    }
    match out.collided {
        Some(e) if out.iterations == 0 => Err(e),
        _ => Err(Error::NonConvergence {
            iterations: out.iterations,
            residual: out.residual,
        }),
    }
}

/// A seed with `p[1,1] = 1` and the other points spread log-uniformly
/// over the annulus `e^-1.5 <= |p| <= e^1.5`.
pub fn random_seed(ctype: &ConfigType, rng: &mut impl Rng) -> Configuration {
    loop {
        let mut levels = Vec::with_capacity(ctype.levels());
        for (k, &n) in ctype.counts().iter().enumerate() {
            let level: Vec<Complex64> = (0..n)
                .map(|i| {
                    if k == 0 && i == 0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::from_polar(rng.random_range(-1.5..1.5f64).exp(), rng.random_range(-PI..PI))
                    }
                })
                .collect();
            levels.push(level);
        }
        let c = Configuration::new(levels).expect("points are nonzero and finite");
        if c.global_collision().is_none() {
            return c;
        }
    }
}

/// Newton from successive random seeds until one converges.
pub fn solve_general_random(
    ctype: &ConfigType,
    seed: u64,
    attempts: usize,
    opts: &NewtonOptions,
) -> Result<NewtonReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = Error::NoSolutionsFound;
    for _ in 0..attempts {
        let start = random_seed(ctype, &mut rng);
        match solve_general(&start, opts) {
            Ok(r) => return Ok(r),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// A few Newton steps that keep the original gauge. Returns the best
/// iterate even if it misses the Newton tolerance.
pub fn polish(c: &Configuration) -> Result<Configuration> {
    let pin = c.points()[0][0];
    let out = iterate(c, &NewtonOptions { max_iter: 20, ..NewtonOptions::default() })?;
    out.best.map_points(|p| p * pin)
}

/// Juxtapose balanced `(1, n_j)` parts into a `(1,n_1,1,n_2,...)` seed.
pub fn concat_seed(parts: &[Configuration]) -> Result<Configuration> {
    if parts.is_empty() {
        return Err(Error::InvalidConfiguration("no parts to concatenate".into()));
    }
    let mut levels = Vec::with_capacity(2 * parts.len());
    for (j, part) in parts.iter().enumerate() {
        let counts = part.ctype().counts();
        if counts.len() != 2 || counts[0] != 1 {
            return Err(Error::InvalidConfiguration(format!(
                "part {} has type {}, expected (1,n)",
                j + 1,
                part.ctype()
            )));
        }
        let r = force_vector(part)?.residual;
        if r >= SOLUTION_TOL {
            return Err(Error::InvalidConfiguration(format!(
                "part {} is not balanced (residual {r:.3e})",
                j + 1
            )));
        }
        levels.extend(part.points().iter().cloned());
    }
    Configuration::new(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::{equivalent, is_nondegenerate};
    use crate::solvers::generate_1n;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn balanced_seed_needs_no_steps() {
        let seed = generate_1n(2).unwrap();
        let rep = solve_general(&seed, &NewtonOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.configuration, seed);
    }

    #[test]
    fn basin_of_one_two() {
        let base = generate_1n(2).unwrap();
        let seed = Configuration::new(vec![
            base.points()[0].clone(),
            base.points()[1].iter().map(|&p| p * c(1.0, 0.05)).collect(),
        ])
        .unwrap();
        let rep = solve_general(&seed, &NewtonOptions::default()).unwrap();
        assert!(rep.residual < 1e-11);
        assert!(equivalent(&rep.configuration, &base, 1e-9));
    }

    #[test]
    fn pins_first_point() {
        let base = generate_1n(3).unwrap().map_points(|p| p * c(2.0, 1.0)).unwrap();
        let seed = base.map_points(|p| p * c(1.0, 0.0)).unwrap();
        let rep = solve_general(&seed, &NewtonOptions::default()).unwrap();
        assert_eq!(rep.configuration.points()[0][0], c(1.0, 0.0));
    }

    #[test]
    fn concatenation() {
        let two = generate_1n(2).unwrap();
        let three = generate_1n(3).unwrap();
        let seed = concat_seed(&[two.clone(), two.clone()]).unwrap();
        assert_eq!(seed.ctype().counts(), &[1, 2, 1, 2]);
        assert_eq!(seed.ctype().genus(), 3);
        let rep = solve_general(&seed, &NewtonOptions::default()).unwrap();
        assert!(rep.residual < 1e-10);
        assert!(is_nondegenerate(&rep.configuration, 1e-8).unwrap());

        let seed = concat_seed(&[three, two.clone()]).unwrap();
        let rep = solve_general(&seed, &NewtonOptions::default()).unwrap();
        assert!(rep.residual < 1e-10);
        assert!(is_nondegenerate(&rep.configuration, 1e-8).unwrap());

        assert_eq!(concat_seed(&[generate_1n(1).unwrap()]).unwrap(), generate_1n(1).unwrap());
        assert!(concat_seed(&[]).is_err());
        assert!(concat_seed(&[seed]).is_err());
    }

    #[test]
    fn colliding_seed_is_rejected() {
        let seed = Configuration::new(vec![vec![c(1.0, 0.0)], vec![c(1.0, 0.0), c(-2.0, 0.0)]]).unwrap();
        assert!(matches!(
            solve_general(&seed, &NewtonOptions::default()),
            Err(Error::CollidingPoints { .. })
        ));
    }

    #[test]
    fn random_search_is_reproducible() {
        let t = ConfigType::new(vec![2, 3]).unwrap();
        let opts = NewtonOptions::default();
        let a = solve_general_random(&t, 7, 40, &opts).unwrap();
        let b = solve_general_random(&t, 7, 40, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.residual < 1e-11);
    }

    #[test]
    fn local_contraction() {
        let base = crate::solvers::solve_2n(5, true).unwrap();
        for sol in &base.solutions {
            let cfg = &sol.configuration;
            let pin = cfg.points()[0][0];
            let exact = cfg.map_points(|p| p / pin).unwrap();
            let flat: Vec<Complex64> = exact
                .flat()
                .iter()
                .enumerate()
                .map(|(i, &p)| if i == 0 { p } else { p * (1.0 + 1e-3 * c((i as f64).cos(), (i as f64).sin())) })
                .collect();
            let seed = Configuration::from_flat(exact.ctype(), &flat).unwrap();
            let rep = solve_general(&seed, &NewtonOptions { tol: 1e-12, ..NewtonOptions::default() }).unwrap();
            assert!(rep.iterations <= 8, "{} iterations", rep.iterations);
            let err = rep
                .configuration
                .flat()
                .iter()
                .zip(exact.flat())
                .map(|(a, b)| (a - b).norm() / b.norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "{err}");
        }
    }
}
