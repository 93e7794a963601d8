use num_complex::Complex64;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::polynomial::{ComplexPoly, ROOT_BACKWARD_TOL};

/// `sum_k C(n,k)^2 z^k`, whose roots are the level-2 points of the `(1,n)`
/// configuration with `p_{1,1} = 1`.
pub fn one_n_polynomial(n: usize) -> ComplexPoly {
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut binom: u128 = 1;
    for k in 0..=n {
        coeffs.push((binom * binom) as f64);
        binom = binom * (n - k) as u128 / (k + 1) as u128;
    }
    ComplexPoly::from_real(&coeffs)
}

pub fn generate_1n(n: usize) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::InvalidType("(1,n) needs n >= 1".into()));
    }
    let roots = one_n_polynomial(n).roots(ROOT_BACKWARD_TOL)?;
    Configuration::new(vec![vec![Complex64::new(1.0, 0.0)], roots])
}
