use rand::distr::{Distribution, Open01};
use rand::Rng;

use crate::error::{Error, Result};

/// Inverse CDF of the zero-mean Laplace distribution with scale `b`:
/// `sign(u - 1/2) * (-b) * ln(1 - 2|u - 1/2|)`.
pub fn laplace_inv_cdf(u: f64, b: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::invalid(format!("u = {u} must lie in (0, 1)")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!(
            "Laplace scale {b} must be positive"
        )));
    }
    let c = u - 0.5;
    Ok(-b * c.signum() * (1.0 - 2.0 * c.abs()).ln())
}

/// A zero-mean Laplace distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceSpec {
    scale: f64,
}

impl LaplaceSpec {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!(
                "Laplace scale {scale} must be positive"
            )));
        }
        Ok(LaplaceSpec { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        // Open01 keeps u inside (0, 1), so the inverse CDF is finite.
        let c = u - 0.5;
        -self.scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
    }
}
