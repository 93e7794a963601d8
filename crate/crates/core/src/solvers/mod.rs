//! Producers of balanced configurations.

pub mod exact;
mod newton;
mod one_n;
mod three_four;
mod two_n;

use std::fmt;

use num_complex::Complex64;

use crate::configuration::{
    equivalent, force_vector, nondegeneracy, rotational_reduction, ConfigType, Configuration,
};
use crate::error::{Error, Result};
use crate::qbalance::q_residual;

pub use newton::{
    concat_seed, polish, random_seed, solve_general, solve_general_random, NewtonOptions,
    NewtonReport,
};
pub use one_n::{generate_1n, one_n_polynomial};
pub use three_four::{
    c_coefficients_34, level_polynomials_34, solve_34, substituted_b, Solve34Options,
};
pub use two_n::{closing_polynomial_2n, coeffs_2n, solve_2n, symbolic_coeffs_2n, AlphaBranch};

/// Residual every stored solution must beat.
pub const SOLUTION_TOL: f64 = 1e-9;
/// Tolerance used by `equivalent` when deduplicating.
pub const DEDUP_TOL: f64 = 1e-8;
/// Singular-value tolerance for the non-degeneracy flag.
pub const RANK_TOL: f64 = 1e-8;
/// Seed used when the caller supplies none.
pub const DEFAULT_SEED: u64 = 0x5eed_2b07;

pub const REASON_REPEATED_ROOT: &str = "repeated-root";
pub const REASON_NONCONVERGENT: &str = "nonconvergent";
pub const REASON_COMPLEX_ALPHA: &str = "complex-alpha";
pub const REASON_ZERO_POINT: &str = "zero-point";

pub fn reason_cross_type(t: &ConfigType) -> String {
    format!("cross-type-reduction:{t}")
}

pub fn reason_equivalent_to(label: &str) -> String {
    format!("equivalent-to:{label}")
}

/// Where a stored configuration came from and how it checked out.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub solver: String,
    pub branch: String,
    pub alpha: Option<Complex64>,
    pub residual: f64,
    pub q_residual: Option<f64>,
    pub nondegenerate: bool,
    /// Set when the configuration is a `p -> p^d` lift of a smaller type.
    pub reduces_to: Option<ConfigType>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub configuration: Configuration,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BranchStatus {
    Accepted,
    /// Stored, but annotated (currently only cross-type reductions).
    Annotated(String),
    Rejected(String),
}

impl BranchStatus {
    pub fn reason(&self) -> Option<&str> {
        match self {
            BranchStatus::Accepted => None,
            BranchStatus::Annotated(r) | BranchStatus::Rejected(r) => Some(r),
        }
    }

    pub fn is_stored(&self) -> bool {
        !matches!(self, BranchStatus::Rejected(_))
    }
}

impl fmt::Display for BranchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchStatus::Accepted => write!(f, "accepted"),
            BranchStatus::Annotated(r) => write!(f, "accepted ({r})"),
            BranchStatus::Rejected(r) => write!(f, "rejected ({r})"),
        }
    }
}

/// One row of a solver's branch table.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport {
    pub label: String,
    pub alpha: Option<Complex64>,
    pub residual: Option<f64>,
    pub status: BranchStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSet {
    pub ctype: ConfigType,
    pub solutions: Vec<Solution>,
    pub branches: Vec<BranchReport>,
    pub deduplicated: bool,
}

/// Force residual, Q residual and non-degeneracy of a candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub residual: f64,
    pub q_residual: Option<f64>,
    pub nondegenerate: bool,
}

pub fn certify(c: &Configuration) -> Result<Certificate> {
    let residual = force_vector(c)?.residual;
    let q = if c.ctype().levels() >= 2 && c.global_collision().is_none() {
        Some(q_residual(c)?)
    } else {
        None
    };
    let nondegenerate = nondegeneracy(c, RANK_TOL)?.is_nondegenerate();
    Ok(Certificate {
        residual,
        q_residual: q,
        nondegenerate,
    })
}

/// Certify `c`, running gauge-preserving Newton polishing when the raw
/// residual misses [`SOLUTION_TOL`].
pub fn certify_or_polish(c: Configuration) -> Result<(Configuration, Certificate)> {
    let cert = certify(&c)?;
    if cert.residual < SOLUTION_TOL {
        return Ok((c, cert));
    }
    let polished = polish(&c)?;
    let cert = certify(&polished)?;
    if cert.residual < SOLUTION_TOL {
        Ok((polished, cert))
    } else {
        Err(Error::NonConvergence {
            iterations: 0,
            residual: cert.residual,
        })
    }
}

impl SolutionSet {
    pub fn new(ctype: ConfigType, deduplicated: bool) -> Self {
        SolutionSet {
            ctype,
            solutions: Vec::new(),
            branches: Vec::new(),
            deduplicated,
        }
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// Solutions that are not lifts of a smaller type.
    pub fn new_solutions(&self) -> impl Iterator<Item = &Solution> {
        self.solutions.iter().filter(|s| s.provenance.reduces_to.is_none())
    }

    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.solutions.iter().map(|s| &s.configuration)
    }

    /// Index of a stored solution equivalent to `c`.
    pub fn find_equivalent(&self, c: &Configuration) -> Option<usize> {
        self.solutions
            .iter()
            .position(|s| equivalent(&s.configuration, c, DEDUP_TOL))
    }

    pub fn reject(&mut self, label: String, alpha: Option<Complex64>, residual: Option<f64>, reason: &str) {
        self.branches.push(BranchReport {
            label,
            alpha,
            residual,
            status: BranchStatus::Rejected(reason.to_string()),
        });
    }

    /// Certify a candidate and store it unless it fails or duplicates an
    /// existing member. Rejections are recorded in the branch table.
    /// Returns whether the candidate was stored.
    pub fn offer(&mut self, solver: &str, label: String, alpha: Option<Complex64>, c: Configuration) -> bool {
        if c.interacting_collision().is_some() {
            self.reject(label, alpha, None, REASON_REPEATED_ROOT);
            return false;
        }
        let (c, cert) = match certify_or_polish(c) {
            Ok(x) => x,
            Err(Error::CollidingPoints { .. }) | Err(Error::RepeatedRoot { .. }) => {
                self.reject(label, alpha, None, REASON_REPEATED_ROOT);
                return false;
            }
            Err(e) => {
                let residual = match e {
                    Error::NonConvergence { residual, .. } => Some(residual),
                    _ => None,
                };
                self.reject(label, alpha, residual, REASON_NONCONVERGENT);
                return false;
            }
        };
        if self.deduplicated {
            if let Some(j) = self.find_equivalent(&c) {
                let reason = reason_equivalent_to(&self.solutions[j].provenance.branch);
                self.reject(label, alpha, Some(cert.residual), &reason);
                return false;
            }
        }
        let reduces_to = rotational_reduction(&c, DEDUP_TOL).map(|r| r.configuration.ctype().clone());
        let status = match &reduces_to {
            Some(t) => BranchStatus::Annotated(reason_cross_type(t)),
            None => BranchStatus::Accepted,
        };
        self.branches.push(BranchReport {
            label: label.clone(),
            alpha,
            residual: Some(cert.residual),
            status,
        });
        self.solutions.push(Solution {
            configuration: c,
            provenance: Provenance {
                solver: solver.to_string(),
                branch: label,
                alpha,
                residual: cert.residual,
                q_residual: cert.q_residual,
                nondegenerate: cert.nondegenerate,
                reduces_to,
            },
        });
        true
    }
}
