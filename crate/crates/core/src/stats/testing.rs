use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::interact::RunRecord;
use crate::linear::ols_solve;

/// Outcome of one hypothesis test, optionally with a significance level and
/// a max-information corrected threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub descriptor: String,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: Option<f64>,
    pub corrected_threshold: Option<f64>,
    pub reject_raw: Option<bool>,
    pub reject_corrected: Option<bool>,
}

impl TestResult {
    pub fn new(descriptor: impl Into<String>, statistic: f64, p_value: f64) -> Self {
        TestResult {
            descriptor: descriptor.into(),
            statistic,
            p_value,
            alpha: None,
            corrected_threshold: None,
            reject_raw: None,
            reject_corrected: None,
        }
    }

    /// Sets the level and the uncorrected decision `p <= α`.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self.reject_raw = Some(self.p_value <= alpha);
        self
    }
}

/// `2 (1 - Φ(|z|))`, evaluated as `2 Φ(-|z|)` to keep precision in the tail.
pub fn normal_two_sided_p(z: f64) -> f64 {
    (2.0 * Normal::standard().cdf(-z.abs())).min(1.0)
}

/// z-test of `θ_j = null` for the OLS fit of `responses` on `design` rows,
/// with known noise standard deviation.
pub fn z_test_coefficient(
    design: &[Vec<f64>],
    responses: &[f64],
    coord: usize,
    null: f64,
    noise_sd: f64,
) -> Result<TestResult> {
    if design.len() != responses.len() {
        return Err(Error::invalid("design and responses differ in length"));
    }
    let dim = design.first().map_or(0, |r| r.len());
    if dim == 0 {
        return Err(Error::UntestableCoordinate { coord, dim });
    }
    let mut xtx = DMatrix::<f64>::zeros(dim, dim);
    let mut xty = DVector::<f64>::zeros(dim);
    for (row, &y) in design.iter().zip(responses) {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        let x = DVector::from_column_slice(row);
        xtx.ger(1.0, &x, &x, 1.0);
        xty.axpy(y, &x, 1.0);
    }
    z_test_from_moments(&xtx, &xty, coord, null, noise_sd)
}

/// As [`z_test_coefficient`], from the sufficient statistics `X'X` and `X'Y`.
pub fn z_test_from_moments(
    xtx: &DMatrix<f64>,
    xty: &DVector<f64>,
    coord: usize,
    null: f64,
    noise_sd: f64,
) -> Result<TestResult> {
    let dim = xty.len();
    if coord >= dim {
        return Err(Error::UntestableCoordinate { coord, dim });
    }
    if !(noise_sd > 0.0) {
        return Err(Error::invalid(format!(
            "noise sd {noise_sd} must be positive"
        )));
    }
    let theta = ols_solve(xtx, xty).ok_or(Error::UntestableCoordinate { coord, dim })?;
    let mut e = DVector::zeros(dim);
    e[coord] = 1.0;
    let inv_jj = ols_solve(xtx, &e).expect("same matrix solved above")[coord];
    let z = (theta[coord] - null) / (noise_sd * inv_jj.sqrt());
    Ok(TestResult::new(
        format!("z-test theta[{coord}] = {null}"),
        z,
        normal_two_sided_p(z),
    ))
}

/// The most-pulled arm, ties to the lowest index; `None` for an empty run.
pub fn most_pulled_arm(record: &RunRecord) -> Option<usize> {
    let counts = record.arm_counts();
    let max = *counts.iter().max()?;
    if max == 0 {
        return None;
    }
    counts.iter().position(|&n| n == max)
}

/// `(Σ y - N μ0) / sqrt(N)` over the rewards of the most-pulled arm.
pub fn adaptive_t_statistic(record: &RunRecord, mu0: f64) -> Result<(usize, f64)> {
    let arm = most_pulled_arm(record).ok_or_else(|| Error::invalid("empty run"))?;
    let n = record.arm_counts()[arm] as f64;
    Ok((arm, (record.arm_sums()[arm] - n * mu0) / n.sqrt()))
}
