//! UCB1 and private UCB for stochastic bandits with rewards in `[0, 1]`.
//!
//! Both policies pull every arm once in index order and then play the argmax
//! of their index, breaking ties toward the lowest arm.

use crate::error::{Error, Result};
use crate::model::RoundContexts;
use crate::policy::{argmax, Policy};
use crate::privacy::{noise_bound, BudgetAccountant, TreeCounter};

/// ChaCha stream of arm `i`'s counter is `COUNTER_STREAM_BASE + i`.
const COUNTER_STREAM_BASE: u64 = 16;

/// `mean + sqrt(2 ln(t/δ) / n)`. The log is floored at zero; `n = 0` gives
/// `+inf` so unpulled arms win the argmax.
pub fn ucb_index(mean: f64, n: u64, t: usize, delta: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    mean + bonus(log_term(t, delta), n)
}

/// Private UCB index from a noisy reward sum: `noisy_sum/n +
/// sqrt(2 ln(t/δ)/n) + γ/n`, where `γ` bounds the counter noise.
pub fn private_ucb_index(noisy_sum: f64, n: u64, t: usize, delta: f64, gamma: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n_f = n as f64;
    noisy_sum / n_f + bonus(log_term(t, delta), n) + gamma / n_f
}

fn log_term(t: usize, delta: f64) -> f64 {
    (t as f64 / delta).ln().max(0.0)
}

fn bonus(log_term: f64, n: u64) -> f64 {
    (2.0 * log_term / n as f64).sqrt()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} must lie in (0, 1)")));
    }
    Ok(())
}

/// Non-private UCB1.
#[derive(Debug, Clone)]
pub struct Ucb {
    counts: Vec<u64>,
    sums: Vec<f64>,
    delta: f64,
}

impl Ucb {
    pub fn new(arms: usize, delta: f64) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("arms must be positive"));
        }
        check_delta(delta)?;
        Ok(Ucb {
            counts: vec![0; arms],
            sums: vec![0.0; arms],
            delta,
        })
    }

    /// UCB with `δ = 1/T`.
    pub fn with_horizon(arms: usize, horizon: usize) -> Result<Self> {
        Self::new(arms, default_delta(horizon)?)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn index(&self, arm: usize, round: usize) -> f64 {
        let n = self.counts[arm];
        if n == 0 {
            return f64::INFINITY;
        }
        ucb_index(self.sums[arm] / n as f64, n, round, self.delta)
    }
}

impl Policy for Ucb {
    fn arms(&self) -> usize {
        self.counts.len()
    }

    fn select(&mut self, round: usize, _contexts: Option<RoundContexts<'_>>) -> Result<usize> {
        if let Some(i) = self.counts.iter().position(|&n| n == 0) {
            return Ok(i);
        }
        let lt = log_term(round, self.delta);
        Ok(argmax(
            self.sums
                .iter()
                .zip(&self.counts)
                .map(|(&s, &n)| s / n as f64 + bonus(lt, n)),
        ))
    }

    fn observe(&mut self, arm: usize, _context: Option<&[f64]>, reward: f64) -> Result<()> {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        Ok(())
    }
}

/// UCB on per-arm private running sums.
///
/// Each arm owns a [`TreeCounter`] with budget `ε/K` that sees only that
/// arm's rewards; everything else the policy computes is a function of the
/// counter releases and the action history, so the selections are ε-DP in
/// the rewards. The confidence relaxation `γ` for an arm with `N` pulls is
/// [`noise_bound`]`(N, ε/K, δ/(KT))`.
#[derive(Debug, Clone)]
pub struct PrivUcb {
    counters: Vec<TreeCounter>,
    noisy_sums: Vec<f64>,
    gammas: Vec<f64>,
    horizon: usize,
    delta: f64,
    epsilon: f64,
    accountant: BudgetAccountant,
}

impl PrivUcb {
    /// `eps = f64::INFINITY` turns the counters into exact sums.
    pub fn new(arms: usize, horizon: usize, eps: f64, delta: f64, seed: u64) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("arms must be positive"));
        }
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        check_delta(delta)?;
        if !(eps > 0.0) {
            return Err(Error::invalid(format!("epsilon {eps} must be positive")));
        }
        let per_arm = eps / arms as f64;
        let mut accountant = BudgetAccountant::new();
        let mut counters = Vec::with_capacity(arms);
        for i in 0..arms {
            counters.push(TreeCounter::with_stream(
                per_arm,
                seed,
                COUNTER_STREAM_BASE + i as u64,
            )?);
            accountant.charge(format!("arm-{i}-counter"), per_arm, 0.0);
        }
        Ok(PrivUcb {
            counters,
            noisy_sums: vec![0.0; arms],
            gammas: vec![0.0; arms],
            horizon,
            delta,
            epsilon: eps,
            accountant,
        })
    }

    /// Private UCB with `δ = 1/T`.
    pub fn with_horizon(arms: usize, horizon: usize, eps: f64, seed: u64) -> Result<Self> {
        Self::new(arms, horizon, eps, default_delta(horizon)?, seed)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn accountant(&self) -> &BudgetAccountant {
        &self.accountant
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counters[arm].len()
    }

    /// Current private index of `arm` at `round`.
    pub fn index(&self, arm: usize, round: usize) -> f64 {
        private_ucb_index(
            self.noisy_sums[arm],
            self.count(arm),
            round,
            self.delta,
            self.gammas[arm],
        )
    }

    fn gamma_failure(&self) -> f64 {
        self.delta / (self.counters.len() as f64 * self.horizon as f64)
    }
}

impl Policy for PrivUcb {
    fn arms(&self) -> usize {
        self.counters.len()
    }

    fn select(&mut self, round: usize, _contexts: Option<RoundContexts<'_>>) -> Result<usize> {
        if let Some(i) = self.counters.iter().position(|c| c.is_empty()) {
            return Ok(i);
        }
        let lt = log_term(round, self.delta);
        Ok(argmax((0..self.counters.len()).map(|i| {
            let n = self.counters[i].len();
            let n_f = n as f64;
            self.noisy_sums[i] / n_f + bonus(lt, n) + self.gammas[i] / n_f
        })))
    }

    fn observe(&mut self, arm: usize, _context: Option<&[f64]>, reward: f64) -> Result<()> {
        let fail = self.gamma_failure();
        let counter = &mut self.counters[arm];
        counter.add(reward)?;
        self.noisy_sums[arm] = counter.release()?;
        self.gammas[arm] = noise_bound(counter.len(), counter.epsilon(), fail)?;
        Ok(())
    }
}

fn default_delta(horizon: usize) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::invalid("default delta 1/T needs T >= 2"));
    }
    Ok(1.0 / horizon as f64)
}
