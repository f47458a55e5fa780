//! Laplace noise, continual prefix-sum release and budget accounting.
//!
//! The counters here release a running sum of a stream under ε-differential
//! privacy. They use dyadic epochs: epoch `e` holds items `2^e .. 2^(e+1) - 1`
//! in a fresh complete binary tree with `e + 1` levels, so every item lives in
//! exactly one epoch and touches exactly `e + 1` tree nodes. Each node is
//! noised with Laplace scale `(e + 1) * s / ε`, where `s` is the per-item
//! sensitivity, giving ε-DP within an epoch and, by parallel composition,
//! over the whole stream. A prefix query at `t` sums the roots of all
//! completed epochs plus the binary decomposition of the current one, which
//! is at most `2 * ceil(log2 t) + 1` noisy nodes.

mod budget;
mod counter;
mod dyadic;
mod laplace;

pub use budget::{BudgetAccountant, Charge};
pub use counter::{NoiseRecord, TreeCounter, VectorTreeCounter};
pub use dyadic::{decomposition, node_count, within_epoch_decomposition, DyadicNode};
pub use laplace::{laplace_inv_cdf, LaplaceSpec};

use crate::error::{Error, Result};

/// High-probability radius of the noise a [`TreeCounter`] adds to its
/// release at time `t`.
///
/// The release at `t` carries `m` independent Laplace terms with scales
/// `b_j = levels_j / ε` (see [`decomposition`]). Two bounds hold with
/// probability at least `1 - δ` and the smaller is returned.
///
/// Union bound over the terms, using `P(|Lap(b)| > b ln(m/δ)) = δ/m`:
///
/// ```text
/// r1 = ln(m/δ) * Σ_j b_j
/// ```
///
/// Sub-exponential tail: `E exp(λ Lap(b)) = 1/(1 - b²λ²) <= exp(2 b²λ²)` for
/// `|λ| <= 1/(2b)`, so the sum has parameters `ν² = 4 Σ b_j²`,
/// `a = 2 max b_j` and Bernstein's inequality gives
///
/// ```text
/// r2 = max(sqrt(8 Σ_j b_j² ln(2/δ)), 4 max_j b_j ln(2/δ))
/// ```
///
/// With `m <= 2 ceil(log2 t) + 1` and `levels <= log2 t + 1`, `r2` grows like
/// `log^1.5(t) log(1/δ) / ε`. At `t = 1` the union bound wins and the radius
/// is the single-node tail `ln(1/δ) / ε`. An infinite `eps` gives zero.
pub fn noise_bound(t: u64, eps: f64, delta_fail: f64) -> Result<f64> {
    check_bound_args(t, eps, delta_fail)?;
    if eps.is_infinite() {
        return Ok(0.0);
    }
    let nodes = decomposition(t);
    let scales: Vec<f64> = nodes.iter().map(|n| n.levels() as f64 / eps).collect();
    let sum: f64 = scales.iter().sum();
    let sum_sq: f64 = scales.iter().map(|b| b * b).sum();
    let max = scales.iter().copied().fold(0.0, f64::max);
    let union = (nodes.len() as f64 / delta_fail).ln() * sum;
    let log2d = (2.0 / delta_fail).ln();
    let bernstein = (8.0 * sum_sq * log2d).sqrt().max(4.0 * max * log2d);
    Ok(union.min(bernstein))
}

/// High-probability bound on the Euclidean norm of a [`VectorTreeCounter`]'s
/// noise at time `t`, for `dim` coordinates with L1 sensitivity `l1_bound`.
///
/// Every coordinate is an independent copy of the scalar noise scaled by
/// `l1_bound`; a union bound over coordinates gives
/// `||η||_2 <= sqrt(dim) * l1_bound * noise_bound(t, eps, δ/dim)`.
pub fn vector_noise_bound(
    t: u64,
    eps: f64,
    l1_bound: f64,
    dim: usize,
    delta_fail: f64,
) -> Result<f64> {
    if dim == 0 || !(l1_bound > 0.0) {
        return Err(Error::invalid("dimension and L1 bound must be positive"));
    }
    let per_coord = noise_bound(t, eps, delta_fail / dim as f64)?;
    Ok((dim as f64).sqrt() * l1_bound * per_coord)
}

fn check_bound_args(t: u64, eps: f64, delta_fail: f64) -> Result<()> {
    if t == 0 {
        return Err(Error::invalid("noise bound needs t >= 1"));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("epsilon {eps} must be positive")));
    }
    if !(delta_fail > 0.0 && delta_fail < 1.0) {
        return Err(Error::invalid(format!(
            "failure probability {delta_fail} must lie in (0, 1)"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_scales_with_inverse_epsilon() {
        for t in [1, 2, 7, 100, 1000] {
            let a = noise_bound(t, 0.7, 0.05).unwrap();
            let b = noise_bound(t, 1.4, 0.05).unwrap();
            assert!((b - a / 2.0).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn bound_at_one_is_single_laplace_tail() {
        // One node with scale 1/ε: P(|Lap(1/ε)| > r) = exp(-rε) = δ.
        let eps = 0.3;
        let delta: f64 = 0.01;
        let r = noise_bound(1, eps, delta).unwrap();
        assert!((r - (1.0 / delta).ln() / eps).abs() < 1e-12);
        assert!(((-r * eps).exp() - delta).abs() < 1e-15);
    }

    #[test]
    fn bound_rejects_bad_args() {
        assert!(noise_bound(0, 1.0, 0.1).is_err());
        assert!(noise_bound(3, 0.0, 0.1).is_err());
        assert!(noise_bound(3, 1.0, 0.0).is_err());
        assert!(noise_bound(3, 1.0, 1.0).is_err());
        assert_eq!(noise_bound(3, f64::INFINITY, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn vector_bound_reduces_to_scalar_in_one_dim() {
        let v = vector_noise_bound(50, 1.0, 1.0, 1, 0.05).unwrap();
        assert_eq!(v, noise_bound(50, 1.0, 0.05).unwrap());
    }
}
