//! Reward models and pre-drawn bandit tableaux.
//!
//! A tableau is the full `T x K` reward matrix (plus per-arm contexts in the
//! contextual case) drawn before any interaction. Rows are produced by a
//! [`RowSampler`] that is shared with the online driver, so the reward a
//! policy sees at `(t, i)` is the same value whether it was drawn up front or
//! on demand.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Stream ids used to split one seed into independent ChaCha streams.
pub(crate) const REWARD_STREAM: u64 = 0;
pub(crate) const CONTEXT_STREAM: u64 = 1;

const NORM_TOL: f64 = 1e-9;

/// How per-arm contexts are produced each round.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextGenerator {
    /// Each arm's context is drawn uniformly from the unit sphere in `R^d`,
    /// independently across arms and rounds.
    UniformSphere { dim: usize },
    /// A fixed list of rounds, each holding one context per arm. Round `t`
    /// uses entry `t mod len`.
    Fixed(Vec<Vec<Vec<f64>>>),
}

impl ContextGenerator {
    pub fn dim(&self) -> usize {
        match self {
            ContextGenerator::UniformSphere { dim } => *dim,
            ContextGenerator::Fixed(rows) => {
                rows.first().and_then(|r| r.first()).map_or(0, |x| x.len())
            }
        }
    }

    fn validate(&self, arms: usize) -> Result<()> {
        match self {
            ContextGenerator::UniformSphere { dim } => {
                if *dim == 0 {
                    return Err(Error::invalid("context dimension must be positive"));
                }
            }
            ContextGenerator::Fixed(rows) => {
                if rows.is_empty() {
                    return Err(Error::invalid("fixed context list is empty"));
                }
                let dim = self.dim();
                if dim == 0 {
                    return Err(Error::invalid("context dimension must be positive"));
                }
                for (t, row) in rows.iter().enumerate() {
                    if row.len() != arms {
                        return Err(Error::invalid(format!(
                            "fixed context row {t} has {} arms, expected {arms}",
                            row.len()
                        )));
                    }
                    for x in row {
                        if x.len() != dim {
                            return Err(Error::DimensionMismatch {
                                expected: dim,
                                got: x.len(),
                            });
                        }
                        let norm = l2(x);
                        if !norm.is_finite() || norm > 1.0 + NORM_TOL {
                            return Err(Error::invalid(format!(
                                "context in row {t} has norm {norm} > 1"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The reward distribution of a bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardModel {
    /// Arm `i` pays `Bernoulli(means[i])`.
    BernoulliArms { means: Vec<f64> },
    /// Arm `i` pays `Uniform[m - w, m + w]` with `m = means[i]` and
    /// `w = min(m, 1 - m)`, so rewards stay in `[0, 1]` with mean `m`.
    UniformArms { means: Vec<f64> },
    /// Arm `i` pays `thetas[i] . x + noise_sd * N(0, 1)`, optionally clamped
    /// to `[0, 1]`.
    LinearGaussian {
        thetas: Vec<Vec<f64>>,
        noise_sd: f64,
        contexts: ContextGenerator,
        clamp: bool,
    },
}

impl RewardModel {
    pub fn arms(&self) -> usize {
        match self {
            RewardModel::BernoulliArms { means } | RewardModel::UniformArms { means } => {
                means.len()
            }
            RewardModel::LinearGaussian { thetas, .. } => thetas.len(),
        }
    }

    pub fn is_contextual(&self) -> bool {
        matches!(self, RewardModel::LinearGaussian { .. })
    }

    /// Context dimension, `None` for stochastic models.
    pub fn dim(&self) -> Option<usize> {
        match self {
            RewardModel::LinearGaussian { contexts, .. } => Some(contexts.dim()),
            _ => None,
        }
    }

    /// Arm means of a stochastic model.
    pub fn means(&self) -> Option<&[f64]> {
        match self {
            RewardModel::BernoulliArms { means } | RewardModel::UniformArms { means } => {
                Some(means)
            }
            RewardModel::LinearGaussian { .. } => None,
        }
    }

    pub fn thetas(&self) -> Option<&[Vec<f64>]> {
        match self {
            RewardModel::LinearGaussian { thetas, .. } => Some(thetas),
            _ => None,
        }
    }

    /// Whether every reward this model can produce lies in `[0, 1]`.
    pub fn is_bounded(&self) -> bool {
        match self {
            RewardModel::LinearGaussian {
                clamp, noise_sd, ..
            } => *clamp || *noise_sd == 0.0,
            _ => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms() == 0 {
            return Err(Error::invalid("model must have at least one arm"));
        }
        match self {
            RewardModel::BernoulliArms { means } | RewardModel::UniformArms { means } => {
                for (i, &m) in means.iter().enumerate() {
                    if !(0.0..=1.0).contains(&m) {
                        return Err(Error::invalid(format!(
                            "arm {i} mean {m} is outside [0, 1]"
                        )));
                    }
                }
            }
            RewardModel::LinearGaussian {
                thetas,
                noise_sd,
                contexts,
                ..
            } => {
                if !(*noise_sd >= 0.0 && noise_sd.is_finite()) {
                    return Err(Error::invalid(format!("noise_sd {noise_sd} must be >= 0")));
                }
                contexts.validate(thetas.len())?;
                let dim = contexts.dim();
                for (i, th) in thetas.iter().enumerate() {
                    if th.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: th.len(),
                        });
                    }
                    let norm = l2(th);
                    if !norm.is_finite() || norm > 1.0 + NORM_TOL {
                        return Err(Error::invalid(format!(
                            "theta for arm {i} has norm {norm} > 1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Expected reward of `arm` given its context (ignored for stochastic
    /// models).
    pub fn expected_reward(&self, arm: usize, context: Option<&[f64]>) -> f64 {
        match self {
            RewardModel::BernoulliArms { means } | RewardModel::UniformArms { means } => means[arm],
            RewardModel::LinearGaussian { thetas, .. } => {
                dot(&thetas[arm], context.expect("linear model needs a context"))
            }
        }
    }
}

/// Per-arm contexts of one round, laid out arm-major.
#[derive(Debug, Clone, Copy)]
pub struct RoundContexts<'a> {
    dim: usize,
    data: &'a [f64],
}

impl<'a> RoundContexts<'a> {
    pub fn new(dim: usize, data: &'a [f64]) -> Self {
        debug_assert!(dim > 0 && data.len() % dim == 0);
        RoundContexts { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arms(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn arm(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Context tensor of a contextual tableau, `T x K x d` row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextTable {
    pub dim: usize,
    pub data: Vec<f64>,
}

/// A `T x K` matrix of pre-drawn rewards, with optional contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditTableau {
    horizon: usize,
    arms: usize,
    rewards: Vec<f64>,
    contexts: Option<ContextTable>,
    bounded: bool,
}

impl BanditTableau {
    /// Builds a stochastic tableau from explicit rows. Every entry must lie in
    /// `[0, 1]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let (horizon, arms, rewards) = flatten_rows(rows)?;
        if let Some(bad) = rewards.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::invalid(format!("reward {bad} is outside [0, 1]")));
        }
        Ok(BanditTableau {
            horizon,
            arms,
            rewards,
            contexts: None,
            bounded: true,
        })
    }

    /// Builds a contextual tableau. `contexts[t][i]` is arm `i`'s context in
    /// round `t`; each must have norm at most one.
    pub fn from_rows_with_contexts(rows: &[Vec<f64>], contexts: &[Vec<Vec<f64>>]) -> Result<Self> {
        let mut tab = Self::from_rows(rows)?;
        if contexts.len() != tab.horizon {
            return Err(Error::invalid(format!(
                "{} context rows for horizon {}",
                contexts.len(),
                tab.horizon
            )));
        }
        let gen = ContextGenerator::Fixed(contexts.to_vec());
        gen.validate(tab.arms)?;
        let dim = gen.dim();
        let data = contexts.iter().flatten().flatten().copied().collect();
        tab.contexts = Some(ContextTable { dim, data });
        Ok(tab)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Reward of arm `arm` at 0-based round `t`.
    pub fn reward(&self, t: usize, arm: usize) -> f64 {
        self.rewards[t * self.arms + arm]
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.rewards[t * self.arms..(t + 1) * self.arms]
    }

    pub fn contexts(&self) -> Option<&ContextTable> {
        self.contexts.as_ref()
    }

    pub fn round_contexts(&self, t: usize) -> Option<RoundContexts<'_>> {
        self.contexts.as_ref().map(|c| {
            let width = self.arms * c.dim;
            RoundContexts::new(c.dim, &c.data[t * width..(t + 1) * width])
        })
    }

    /// True when every reward is guaranteed to lie in `[0, 1]`.
    pub fn is_bounded(&self) -> bool {
        self.bounded
    }
}

fn flatten_rows(rows: &[Vec<f64>]) -> Result<(usize, usize, Vec<f64>)> {
    let horizon = rows.len();
    if horizon == 0 {
        return Err(Error::invalid("tableau needs at least one round"));
    }
    let arms = rows[0].len();
    if arms == 0 {
        return Err(Error::invalid("tableau needs at least one arm"));
    }
    if rows.iter().any(|r| r.len() != arms) {
        return Err(Error::invalid("tableau rows have unequal lengths"));
    }
    Ok((horizon, arms, rows.iter().flatten().copied().collect()))
}

/// Draws rows of rewards (and contexts) in order.
///
/// Each reward entry consumes exactly one uniform from the reward stream, in
/// row-major order; contexts come from a separate stream so that a fixed
/// context list does not shift the reward draws.
pub(crate) struct RowSampler<'a> {
    model: &'a RewardModel,
    reward_rng: ChaCha8Rng,
    context_rng: ChaCha8Rng,
    normal: Normal,
}

impl<'a> RowSampler<'a> {
    pub(crate) fn new(model: &'a RewardModel, seed: u64) -> Self {
        let mut reward_rng = ChaCha8Rng::seed_from_u64(seed);
        reward_rng.set_stream(REWARD_STREAM);
        let mut context_rng = ChaCha8Rng::seed_from_u64(seed);
        context_rng.set_stream(CONTEXT_STREAM);
        RowSampler {
            model,
            reward_rng,
            context_rng,
            normal: Normal::standard(),
        }
    }

    /// Fills `contexts` (length `K * d`, untouched for stochastic models) and
    /// `rewards` (length `K`) for 0-based round `t`.
    pub(crate) fn next_row(&mut self, t: usize, contexts: &mut [f64], rewards: &mut [f64]) {
        match self.model {
            RewardModel::BernoulliArms { means } => {
                for (r, &m) in rewards.iter_mut().zip(means) {
                    let u: f64 = self.reward_rng.random();
                    *r = if u < m { 1.0 } else { 0.0 };
                }
            }
            RewardModel::UniformArms { means } => {
                for (r, &m) in rewards.iter_mut().zip(means) {
                    let u: f64 = self.reward_rng.random();
                    let w = m.min(1.0 - m);
                    *r = (m - w + 2.0 * w * u).clamp(0.0, 1.0);
                }
            }
            RewardModel::LinearGaussian {
                thetas,
                noise_sd,
                contexts: gen,
                clamp,
            } => {
                let dim = gen.dim();
                match gen {
                    ContextGenerator::UniformSphere { .. } => {
                        for x in contexts.chunks_mut(dim) {
                            sample_unit_sphere(&mut self.context_rng, x);
                        }
                    }
                    ContextGenerator::Fixed(rows) => {
                        let row = &rows[t % rows.len()];
                        for (x, src) in contexts.chunks_mut(dim).zip(row) {
                            x.copy_from_slice(src);
                        }
                    }
                }
                for (i, r) in rewards.iter_mut().enumerate() {
                    let u: f64 = Open01.sample(&mut self.reward_rng);
                    let z = self.normal.inverse_cdf(u);
                    let x = &contexts[i * dim..(i + 1) * dim];
                    let y = dot(&thetas[i], x) + noise_sd * z;
                    *r = if *clamp { y.clamp(0.0, 1.0) } else { y };
                }
            }
        }
    }
}

/// Draws a point uniformly from the unit sphere by normalising a Gaussian.
/// An empty slice is left untouched.
pub fn sample_unit_sphere<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    loop {
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let norm = l2(out);
        if norm > 1e-12 {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// Draws a `T x K` tableau from `model`. Deterministic in `seed`.
pub fn generate_tableau(model: &RewardModel, horizon: usize, seed: u64) -> Result<BanditTableau> {
    model.validate()?;
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let arms = model.arms();
    let dim = model.dim().unwrap_or(0);
    let mut sampler = RowSampler::new(model, seed);
    let mut rewards = vec![0.0; horizon * arms];
    let mut contexts = model.dim().map(|d| vec![0.0; horizon * arms * d]);
    for t in 0..horizon {
        let ctx = match contexts.as_mut() {
            Some(c) => &mut c[t * arms * dim..(t + 1) * arms * dim],
            None => &mut [][..],
        };
        sampler.next_row(t, ctx, &mut rewards[t * arms..(t + 1) * arms]);
    }
    Ok(BanditTableau {
        horizon,
        arms,
        rewards,
        contexts: contexts.map(|data| ContextTable { dim, data }),
        bounded: model.is_bounded(),
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Equally spaced arm means `top, top - gap, top - 2 gap, ...`.
pub fn spaced_means(arms: usize, top: f64, gap: f64) -> Vec<f64> {
    (0..arms).map(|i| top - i as f64 * gap).collect()
}
