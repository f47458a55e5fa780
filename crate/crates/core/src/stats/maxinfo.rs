use std::f64::consts::LOG2_E;

use super::TestResult;
use crate::error::{Error, Result};

/// β-approximate max-information, in bits, of an ε-DP computation on `T`
/// records: `log2(e) (ε² T / 2 + ε sqrt(T ln(2/β) / 2))`.
pub fn max_info_bound(eps: f64, horizon: u64, beta: f64) -> Result<f64> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!(
            "epsilon {eps} must be finite and >= 0"
        )));
    }
    if horizon == 0 {
        return Err(Error::invalid("T must be at least 1"));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("beta {beta} must lie in (0, 1)")));
    }
    let t = horizon as f64;
    Ok(LOG2_E * (eps * eps * t / 2.0 + eps * (t * (2.0 / beta).ln() / 2.0).sqrt()))
}

/// `γ(α) = max((α - β) / 2^k, 0)`.
pub fn pvalue_correction(alpha: f64, beta: f64, k: f64) -> f64 {
    ((alpha - beta) / k.exp2()).max(0.0)
}

/// Applies the max-information correction for ε-DP gathering over `T`
/// rounds. `beta = 0` is allowed only with `eps = 0`, where no correction is
/// needed.
pub fn corrected_test(
    result: &TestResult,
    eps: f64,
    horizon: u64,
    beta: f64,
    alpha: f64,
) -> Result<TestResult> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid("alpha and beta must lie in [0, 1]"));
    }
    let k = if eps == 0.0 {
        0.0
    } else {
        max_info_bound(eps, horizon, beta)?
    };
    let gamma = pvalue_correction(alpha, beta, k);
    let mut out = result.clone().with_alpha(alpha);
    out.corrected_threshold = Some(gamma);
    out.reject_corrected = Some(result.p_value <= gamma);
    Ok(out)
}
