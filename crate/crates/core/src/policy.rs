//! The policy interface and a few non-adaptive baselines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::RoundContexts;

/// An arm-selection procedure driven by [`crate::interact_tableau`] or
/// [`crate::interact_online`].
///
/// Rounds are 1-based; arms are 0-based. Given identical seeds and identical
/// observation sequences, implementations must select identically.
pub trait Policy {
    fn arms(&self) -> usize;

    /// Chooses the arm for round `round`, seeing this round's contexts if the
    /// problem is contextual.
    fn select(&mut self, round: usize, contexts: Option<RoundContexts<'_>>) -> Result<usize>;

    /// Feeds back the reward of the arm chosen this round.
    fn observe(&mut self, arm: usize, context: Option<&[f64]>, reward: f64) -> Result<()>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn arms(&self) -> usize {
        (**self).arms()
    }

    fn select(&mut self, round: usize, contexts: Option<RoundContexts<'_>>) -> Result<usize> {
        (**self).select(round, contexts)
    }

    fn observe(&mut self, arm: usize, context: Option<&[f64]>, reward: f64) -> Result<()> {
        (**self).observe(arm, context, reward)
    }
}

/// Index of the largest value; ties go to the lowest index. NaN never wins.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Cycles through the arms in index order, ignoring all feedback.
#[derive(Debug, Clone)]
pub struct RoundRobin {
    arms: usize,
}

impl RoundRobin {
    pub fn new(arms: usize) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("arms must be positive"));
        }
        Ok(RoundRobin { arms })
    }
}

impl Policy for RoundRobin {
    fn arms(&self) -> usize {
        self.arms
    }

    fn select(&mut self, round: usize, _contexts: Option<RoundContexts<'_>>) -> Result<usize> {
        Ok((round - 1) % self.arms)
    }

    fn observe(&mut self, _arm: usize, _context: Option<&[f64]>, _reward: f64) -> Result<()> {
        Ok(())
    }
}

/// Picks an arm uniformly at random each round, ignoring all feedback.
#[derive(Debug, Clone)]
pub struct UniformRandom {
    arms: usize,
    rng: ChaCha8Rng,
}

impl UniformRandom {
    pub fn new(arms: usize, seed: u64) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("arms must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(POLICY_STREAM);
        Ok(UniformRandom { arms, rng })
    }
}

impl Policy for UniformRandom {
    fn arms(&self) -> usize {
        self.arms
    }

    fn select(&mut self, _round: usize, _contexts: Option<RoundContexts<'_>>) -> Result<usize> {
        Ok(self.rng.random_range(0..self.arms))
    }

    fn observe(&mut self, _arm: usize, _context: Option<&[f64]>, _reward: f64) -> Result<()> {
        Ok(())
    }
}

/// Pulls each arm once, then always the arm with the highest sample mean.
#[derive(Debug, Clone)]
pub struct Greedy {
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl Greedy {
    pub fn new(arms: usize) -> Result<Self> {
        if arms == 0 {
            return Err(Error::invalid("arms must be positive"));
        }
        Ok(Greedy {
            counts: vec![0; arms],
            sums: vec![0.0; arms],
        })
    }
}

impl Policy for Greedy {
    fn arms(&self) -> usize {
        self.counts.len()
    }

    fn select(&mut self, _round: usize, _contexts: Option<RoundContexts<'_>>) -> Result<usize> {
        if let Some(i) = self.counts.iter().position(|&n| n == 0) {
            return Ok(i);
        }
        Ok(argmax(
            self.sums
                .iter()
                .zip(&self.counts)
                .map(|(s, &n)| s / n as f64),
        ))
    }

    fn observe(&mut self, arm: usize, _context: Option<&[f64]>, reward: f64) -> Result<()> {
        self.counts[arm] += 1;
        self.sums[arm] += reward;
        Ok(())
    }
}

/// ChaCha stream reserved for a policy's own selection randomness.
pub(crate) const POLICY_STREAM: u64 = 8;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax([1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax([f64::INFINITY, f64::INFINITY]), 0);
        assert_eq!(argmax([f64::NAN, 0.5]), 1);
    }

    #[test]
    fn round_robin_cycles() {
        let mut p = RoundRobin::new(2).unwrap();
        let picks: Vec<usize> = (1..=4).map(|t| p.select(t, None).unwrap()).collect();
        assert_eq!(picks, vec![0, 1, 0, 1]);
    }

    #[test]
    fn uniform_random_is_seeded() {
        let mut a = UniformRandom::new(5, 11).unwrap();
        let mut b = UniformRandom::new(5, 11).unwrap();
        for t in 1..100 {
            assert_eq!(a.select(t, None).unwrap(), b.select(t, None).unwrap());
        }
    }
}
