//! Bias reports, hypothesis tests on gathered data, max-information bounds
//! and p-value correction.

mod bias;
mod maxinfo;
mod testing;

pub use bias::{estimate_bias, ArmBias, BiasAccumulator, BiasReport};
pub use maxinfo::{corrected_test, max_info_bound, pvalue_correction};
pub use testing::{
    adaptive_t_statistic, most_pulled_arm, normal_two_sided_p, z_test_coefficient,
    z_test_from_moments, TestResult,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Two-sided Hoeffding radius `sqrt(ln(2/δ) / (2n))` for the mean of `n`
/// i.i.d. samples in `[0, 1]`.
pub fn hoeffding_width(n: u64, delta_fail: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("Hoeffding width needs n >= 1"));
    }
    if !(delta_fail > 0.0 && delta_fail < 1.0) {
        return Err(Error::invalid(format!(
            "failure probability {delta_fail} must lie in (0, 1)"
        )));
    }
    Ok(((2.0 / delta_fail).ln() / (2.0 * n as f64)).sqrt())
}

/// Running mean and standard error (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MeanSe {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanSe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance; NaN with fewer than two values.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean; NaN with fewer than two values.
    pub fn se(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
/// Uniform[0, 1].
pub fn ks_uniform(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hoeffding_reference() {
        let delta = 2.0 / std::f64::consts::E;
        assert!((hoeffding_width(2, delta).unwrap() - 0.5).abs() < 1e-12);
        let a = hoeffding_width(10, 0.1).unwrap();
        let b = hoeffding_width(40, 0.1).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(hoeffding_width(0, 0.1).is_err());
        assert!(hoeffding_width(5, 1.0).is_err());
    }

    #[test]
    fn mean_se_matches_two_pass() {
        let xs = [1.0, 4.0, 2.0, 8.0, 5.0];
        let mut acc = MeanSe::new();
        xs.iter().for_each(|&x| acc.push(x));
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((acc.mean() - mean).abs() < 1e-12);
        assert!((acc.se() - (var / 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ks_of_grid() {
        let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&grid) - 0.005).abs() < 1e-12);
        assert!((ks_uniform(&[0.0, 0.0]) - 1.0).abs() < 1e-12);
    }
}
