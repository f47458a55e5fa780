//! Interaction drivers, run records and pseudo-regret.
//!
//! [`interact_tableau`] shows a policy one pre-drawn row per round and reveals
//! only the chosen entry. [`interact_online`] draws each row when the round
//! starts, consuming the same random stream as [`generate_tableau`], so for a
//! shared seed both drivers produce the same transcript exactly.
//!
//! [`generate_tableau`]: crate::model::generate_tableau

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BanditTableau, RewardModel, RoundContexts, RowSampler};
use crate::policy::Policy;

/// The sequence of arms pulled (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ActionHistory(Vec<usize>);

impl ActionHistory {
    pub fn choices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Everything observed in one run of a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    history: ActionHistory,
    observed: Vec<f64>,
    counts: Vec<u64>,
    sums: Vec<f64>,
}

impl RunRecord {
    pub fn new(arms: usize) -> Self {
        RunRecord {
            history: ActionHistory::default(),
            observed: Vec::new(),
            counts: vec![0; arms],
            sums: vec![0.0; arms],
        }
    }

    pub fn with_capacity(arms: usize, horizon: usize) -> Self {
        let mut r = Self::new(arms);
        r.history.0.reserve(horizon);
        r.observed.reserve(horizon);
        r
    }

    pub fn push(&mut self, arm: usize, reward: f64) {
        self.history.0.push(arm);
        self.observed.push(reward);
        self.counts[arm] += 1;
        self.sums[arm] += reward;
    }

    pub fn history(&self) -> &ActionHistory {
        &self.history
    }

    pub fn observed_rewards(&self) -> &[f64] {
        &self.observed
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn horizon(&self) -> usize {
        self.observed.len()
    }

    /// `N_i^T` per arm.
    pub fn arm_counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn arm_sums(&self) -> &[f64] {
        &self.sums
    }

    /// Per-arm sample means; `None` for arms that were never pulled.
    pub fn sample_means(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .zip(&self.sums)
            .map(|(&n, &s)| (n > 0).then(|| s / n as f64))
            .collect()
    }

    /// Writes one row per round: `t,arm,reward`, with `t` and `arm` 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,arm,reward")?;
        for (t, (&arm, &y)) in self.history.0.iter().zip(&self.observed).enumerate() {
            writeln!(w, "{},{},{}", t + 1, arm + 1, y)?;
        }
        Ok(())
    }

    /// Per-arm counts and means as JSON. Arms are 1-based; unpulled arms have
    /// a `null` mean.
    pub fn summary_json(&self) -> serde_json::Value {
        let arms: Vec<_> = self
            .sample_means()
            .into_iter()
            .enumerate()
            .map(|(i, mean)| {
                serde_json::json!({
                    "arm": i + 1,
                    "count": self.counts[i],
                    "sum": self.sums[i],
                    "mean": mean,
                })
            })
            .collect();
        serde_json::json!({ "horizon": self.horizon(), "arms": arms })
    }
}

fn check_arm(round: usize, arm: usize, arms: usize) -> Result<()> {
    if arm >= arms {
        return Err(Error::ProtocolViolation { round, arm, arms });
    }
    Ok(())
}

/// Runs `policy` against a pre-drawn tableau.
pub fn interact_tableau<P: Policy + ?Sized>(
    tab: &BanditTableau,
    policy: &mut P,
) -> Result<RunRecord> {
    let arms = tab.arms();
    if policy.arms() != arms {
        return Err(Error::invalid(format!(
            "policy has {} arms, tableau has {arms}",
            policy.arms()
        )));
    }
    let mut record = RunRecord::with_capacity(arms, tab.horizon());
    for t in 0..tab.horizon() {
        let ctx = tab.round_contexts(t);
        let arm = policy.select(t + 1, ctx)?;
        check_arm(t + 1, arm, arms)?;
        let y = tab.reward(t, arm);
        policy.observe(arm, ctx.map(|c| c.arm(arm)), y)?;
        record.push(arm, y);
    }
    Ok(record)
}

/// Runs `policy` against `model`, drawing each round's rewards when the round
/// starts.
pub fn interact_online<P: Policy + ?Sized>(
    model: &RewardModel,
    horizon: usize,
    policy: &mut P,
    seed: u64,
) -> Result<RunRecord> {
    model.validate()?;
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let arms = model.arms();
    if policy.arms() != arms {
        return Err(Error::invalid(format!(
            "policy has {} arms, model has {arms}",
            policy.arms()
        )));
    }
    let dim = model.dim().unwrap_or(0);
    let mut sampler = RowSampler::new(model, seed);
    let mut ctx_buf = vec![0.0; arms * dim];
    let mut row = vec![0.0; arms];
    let mut record = RunRecord::with_capacity(arms, horizon);
    for t in 0..horizon {
        sampler.next_row(t, &mut ctx_buf, &mut row);
        let ctx = (dim > 0).then(|| RoundContexts::new(dim, &ctx_buf));
        let arm = policy.select(t + 1, ctx)?;
        check_arm(t + 1, arm, arms)?;
        let y = row[arm];
        policy.observe(arm, ctx.map(|c| c.arm(arm)), y)?;
        record.push(arm, y);
    }
    Ok(record)
}

/// `T * max_i mu_i - sum_t mu_{i_t}` for a stochastic model.
pub fn pseudo_regret_stochastic(record: &RunRecord, model: &RewardModel) -> Result<f64> {
    let means = model
        .means()
        .ok_or_else(|| Error::invalid("pseudo_regret_stochastic needs a stochastic model"))?;
    if means.len() != record.arms() {
        return Err(Error::invalid("record and model disagree on arm count"));
    }
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(record
        .arm_counts()
        .iter()
        .zip(means)
        .map(|(&n, &m)| n as f64 * (best - m))
        .sum())
}

/// Pseudo-regret after each round in `checkpoints` (1-based round counts,
/// ascending).
pub fn regret_curve_stochastic(
    record: &RunRecord,
    model: &RewardModel,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    let means = model
        .means()
        .ok_or_else(|| Error::invalid("regret curve needs a stochastic model"))?;
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut t = 0;
    for &cp in checkpoints {
        if cp > record.horizon() {
            return Err(Error::invalid(format!(
                "checkpoint {cp} beyond horizon {}",
                record.horizon()
            )));
        }
        while t < cp {
            acc += best - means[record.history().choices()[t]];
            t += 1;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `sum_t (max_i theta_i . x_{i,t} - theta_{i_t} . x_{i_t,t})`.
pub fn pseudo_regret_contextual(
    record: &RunRecord,
    tab: &BanditTableau,
    model: &RewardModel,
) -> Result<f64> {
    Ok(regret_curve_contextual(record, tab, model, &[record.horizon()])?[0])
}

pub fn regret_curve_contextual(
    record: &RunRecord,
    tab: &BanditTableau,
    model: &RewardModel,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    if !model.is_contextual() {
        return Err(Error::invalid("contextual regret needs a linear model"));
    }
    if tab.contexts().is_none() {
        return Err(Error::MissingContexts);
    }
    if record.horizon() > tab.horizon() {
        return Err(Error::invalid("record is longer than the tableau"));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut acc = 0.0;
    let mut t = 0;
    for &cp in checkpoints {
        if cp > record.horizon() {
            return Err(Error::invalid(format!(
                "checkpoint {cp} beyond horizon {}",
                record.horizon()
            )));
        }
        while t < cp {
            let ctx = tab.round_contexts(t).expect("checked above");
            let best = (0..tab.arms())
                .map(|i| model.expected_reward(i, Some(ctx.arm(i))))
                .fold(f64::NEG_INFINITY, f64::max);
            let arm = record.history().choices()[t];
            acc += best - model.expected_reward(arm, Some(ctx.arm(arm)));
            t += 1;
        }
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_tableau, ContextGenerator};
    use crate::policy::{Greedy, RoundRobin};

    struct Fixed(usize, usize);

    impl Policy for Fixed {
        fn arms(&self) -> usize {
            self.0
        }
        fn select(&mut self, _: usize, _: Option<RoundContexts<'_>>) -> Result<usize> {
            Ok(self.1)
        }
        fn observe(&mut self, _: usize, _: Option<&[f64]>, _: f64) -> Result<()> {
            Ok(())
        }
    }

    fn bern(means: &[f64]) -> RewardModel {
        RewardModel::BernoulliArms {
            means: means.to_vec(),
        }
    }

    #[test]
    fn single_arm_reads_column() {
        let tab = generate_tableau(&bern(&[0.3]), 25, 4).unwrap();
        let rec = interact_tableau(&tab, &mut RoundRobin::new(1).unwrap()).unwrap();
        assert!(rec.history().choices().iter().all(|&a| a == 0));
        let col: Vec<f64> = (0..25).map(|t| tab.reward(t, 0)).collect();
        assert_eq!(rec.observed_rewards(), &col[..]);
    }

    #[test]
    fn greedy_hand_trace() {
        // Rows (1, 0): round 1 pulls arm 0 (unpulled), round 2 pulls arm 1
        // (unpulled), round 3 compares means 1.0 vs 0.0 and returns to arm 0.
        let tab = BanditTableau::from_rows(&vec![vec![1.0, 0.0]; 3]).unwrap();
        let rec = interact_tableau(&tab, &mut Greedy::new(2).unwrap()).unwrap();
        assert_eq!(rec.history().choices(), &[0, 1, 0]);
        assert_eq!(rec.observed_rewards(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn out_of_range_arm_is_protocol_violation() {
        let tab = BanditTableau::from_rows(&vec![vec![0.5, 0.5]; 2]).unwrap();
        let err = interact_tableau(&tab, &mut Fixed(2, 2)).unwrap_err();
        assert!(matches!(
            err,
            Error::ProtocolViolation {
                round: 1,
                arm: 2,
                arms: 2
            }
        ));
        let err = interact_online(&bern(&[0.5, 0.5]), 2, &mut Fixed(2, 5), 0).unwrap_err();
        assert!(matches!(err, Error::ProtocolViolation { .. }));
    }

    #[test]
    fn online_round_robin() {
        let rec =
            interact_online(&bern(&[1.0, 1.0]), 4, &mut RoundRobin::new(2).unwrap(), 1).unwrap();
        assert_eq!(rec.history().choices(), &[0, 1, 0, 1]);
        assert_eq!(rec.arm_counts(), &[2, 2]);
    }

    #[test]
    fn online_equals_tableau_for_deterministic_rewards() {
        let model = bern(&[1.0, 0.0, 1.0]);
        let tab = generate_tableau(&model, 30, 5).unwrap();
        let a = interact_tableau(&tab, &mut Greedy::new(3).unwrap()).unwrap();
        let b = interact_online(&model, 30, &mut Greedy::new(3).unwrap(), 123).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stochastic_regret_examples() {
        let model = bern(&[1.0, 0.95]);
        let mut rec = RunRecord::new(2);
        rec.push(1, 1.0);
        rec.push(1, 0.0);
        assert!((pseudo_regret_stochastic(&rec, &model).unwrap() - 0.10).abs() < 1e-12);

        let mut best = RunRecord::new(2);
        best.push(0, 1.0);
        best.push(0, 1.0);
        assert_eq!(pseudo_regret_stochastic(&best, &model).unwrap(), 0.0);

        let flat = bern(&[0.5, 0.5]);
        assert_eq!(pseudo_regret_stochastic(&rec, &flat).unwrap(), 0.0);

        let lin = RewardModel::LinearGaussian {
            thetas: vec![vec![1.0]],
            noise_sd: 0.0,
            contexts: ContextGenerator::UniformSphere { dim: 1 },
            clamp: true,
        };
        assert!(pseudo_regret_stochastic(&rec, &lin).is_err());
    }

    #[test]
    fn contextual_regret_examples() {
        // d = 1, theta = (1, -1), contexts all (1): arm 1 loses 2 per round.
        let model = RewardModel::LinearGaussian {
            thetas: vec![vec![1.0], vec![-1.0]],
            noise_sd: 0.0,
            contexts: ContextGenerator::Fixed(vec![vec![vec![1.0], vec![1.0]]]),
            clamp: true,
        };
        let tab = generate_tableau(&model, 3, 0).unwrap();
        let mut rec = RunRecord::new(2);
        for t in 0..3 {
            rec.push(1, tab.reward(t, 1));
        }
        assert!((pseudo_regret_contextual(&rec, &tab, &model).unwrap() - 6.0).abs() < 1e-12);

        let mut opt = RunRecord::new(2);
        for t in 0..3 {
            opt.push(0, tab.reward(t, 0));
        }
        assert_eq!(pseudo_regret_contextual(&opt, &tab, &model).unwrap(), 0.0);

        let stoch_tab = BanditTableau::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert!(matches!(
            pseudo_regret_contextual(&rec, &stoch_tab, &model),
            Err(Error::MissingContexts)
        ));
    }

    #[test]
    fn one_arm_contextual_regret_is_zero() {
        let model = RewardModel::LinearGaussian {
            thetas: vec![vec![0.3, -0.4]],
            noise_sd: 0.5,
            contexts: ContextGenerator::UniformSphere { dim: 2 },
            clamp: false,
        };
        let tab = generate_tableau(&model, 40, 2).unwrap();
        let rec = interact_tableau(&tab, &mut RoundRobin::new(1).unwrap()).unwrap();
        assert_eq!(pseudo_regret_contextual(&rec, &tab, &model).unwrap(), 0.0);
    }

    #[test]
    fn csv_and_summary() {
        let mut rec = RunRecord::new(3);
        rec.push(0, 1.0);
        rec.push(2, 0.5);
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,arm,reward\n1,1,1\n2,3,0.5\n"
        );
        let js = rec.summary_json();
        assert_eq!(js["arms"][1]["mean"], serde_json::Value::Null);
        assert_eq!(js["arms"][2]["mean"], 0.5);
        assert_eq!(rec.sample_means(), vec![Some(1.0), None, Some(0.5)]);
    }
}
