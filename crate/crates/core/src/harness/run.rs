//! Experiment runners. Each returns in-memory results; [`super::output`]
//! turns them into files.
//!
//! Replication `r` uses seed `base_seed + r` for its tableau, its policy and
//! any per-replication parameters. Replications run on the current rayon
//! pool and are collected in index order before any aggregation, so results
//! do not depend on the thread count.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, PolicyKind, RewardLaw};
use crate::error::{Error, Result};
use crate::interact::{
    interact_online, interact_tableau, regret_curve_contextual, regret_curve_stochastic,
};
use crate::linear::{prediction_bias, GatherPolicy, LinUcb, LinUcbConfig, PredictionBias};
use crate::model::{
    generate_tableau, sample_unit_sphere, spaced_means, ContextGenerator, RewardModel,
};
use crate::policy::{Greedy, Policy, RoundRobin, UniformRandom};
use crate::stats::{
    adaptive_t_statistic, corrected_test, most_pulled_arm, normal_two_sided_p, z_test_from_moments,
    BiasAccumulator, BiasReport, MeanSe, TestResult,
};
use crate::stochastic::{PrivUcb, Ucb};

/// ChaCha stream for per-replication parameters such as random `θ`.
const PARAM_STREAM: u64 = 7;

pub fn rep_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

/// Mean and standard error of cumulative regret at round `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegretPoint {
    pub t: usize,
    pub mean: f64,
    pub se: f64,
}

/// One replication's p-value for the test on the most-pulled arm. The
/// p-value is absent when the test was undefined (rank-deficient design).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PvalueRow {
    pub rep: usize,
    pub arm_star: usize,
    pub pvalue: Option<f64>,
    pub zstat: Option<f64>,
}

/// Rejection rates of a set of p-values at the raw and corrected levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PvalueSummary {
    pub testable: usize,
    pub untestable: usize,
    pub alpha: f64,
    pub frac_below_alpha: f64,
    /// Present for private gathering only, where the correction is valid.
    pub corrected_threshold: Option<f64>,
    pub frac_below_corrected: Option<f64>,
}

impl PvalueSummary {
    fn new(rows: &[PvalueRow], alpha: f64, corrected: Option<f64>) -> Self {
        let ps: Vec<f64> = rows.iter().filter_map(|r| r.pvalue).collect();
        let frac = |thr: f64| {
            if ps.is_empty() {
                f64::NAN
            } else {
                ps.iter().filter(|&&p| p <= thr).count() as f64 / ps.len() as f64
            }
        };
        PvalueSummary {
            testable: ps.len(),
            untestable: rows.len() - ps.len(),
            alpha,
            frac_below_alpha: frac(alpha),
            corrected_threshold: corrected,
            frac_below_corrected: corrected.map(frac),
        }
    }

    /// Standard error of a rejection fraction `f` over the testable reps.
    pub fn se_of(&self, f: f64) -> f64 {
        (f * (1.0 - f) / self.testable as f64).sqrt()
    }
}

/// Per-replication arm counts and sample means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepSummary {
    pub rep: usize,
    pub counts: Vec<u64>,
    pub sample_means: Vec<Option<f64>>,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticResult {
    pub policy: PolicyKind,
    pub epsilon: Option<f64>,
    pub means: Vec<f64>,
    pub bias: BiasReport,
    pub regret: Vec<RegretPoint>,
    pub pvalues: Vec<PvalueRow>,
    pub pvalue_summary: PvalueSummary,
    pub reps: Vec<RepSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearPvalueResult {
    pub policy: PolicyKind,
    pub epsilon: Option<f64>,
    pub pvalues: Vec<PvalueRow>,
    pub summary: PvalueSummary,
    pub regret: Vec<RegretPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearBiasResult {
    pub policy: PolicyKind,
    pub epsilon: Option<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub arms: Vec<PredictionBias>,
}

/// The stochastic model of a config: means `top, top - Δ, ...`.
pub fn stochastic_model(cfg: &ExperimentConfig) -> RewardModel {
    let means = spaced_means(cfg.arms, cfg.top_mean, cfg.gap)
        .into_iter()
        .map(|m| m.clamp(0.0, 1.0))
        .collect();
    match cfg.reward_law {
        RewardLaw::Bernoulli => RewardModel::BernoulliArms { means },
        RewardLaw::Uniform => RewardModel::UniformArms { means },
    }
}

/// Builds a policy. `epsilon` is used by the private kinds only.
pub fn make_policy(
    kind: PolicyKind,
    cfg: &ExperimentConfig,
    epsilon: f64,
    seed: u64,
) -> Result<Box<dyn Policy + Send>> {
    let (k, t, delta) = (cfg.arms, cfg.horizon, cfg.delta_value());
    let linear = |eps: Option<f64>| {
        LinUcb::new(
            LinUcbConfig {
                arms: k,
                dim: cfg.dim,
                horizon: t,
                lambda: cfg.lambda,
                delta,
                epsilon: eps,
            },
            seed,
        )
    };
    Ok(match kind {
        PolicyKind::Ucb => Box::new(Ucb::new(k, delta)?),
        PolicyKind::PrivUcb => Box::new(PrivUcb::new(k, t, epsilon, delta, seed)?),
        PolicyKind::Uniform => Box::new(UniformRandom::new(k, seed)?),
        PolicyKind::RoundRobin => Box::new(RoundRobin::new(k)?),
        PolicyKind::Greedy => Box::new(Greedy::new(k)?),
        PolicyKind::Oful => Box::new(linear(None)?),
        PolicyKind::LinPriv => Box::new(linear(Some(epsilon))?),
    })
}

fn aggregate_curves(curves: &[Vec<f64>], checkpoints: &[usize]) -> Vec<RegretPoint> {
    checkpoints
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut acc = MeanSe::new();
            curves.iter().for_each(|c| acc.push(c[j]));
            RegretPoint {
                t,
                mean: acc.mean(),
                se: if curves.len() > 1 { acc.se() } else { 0.0 },
            }
        })
        .collect()
}

/// Reward standard deviation of arm mean `m` under the config's law.
fn reward_sd(law: RewardLaw, m: f64) -> f64 {
    match law {
        RewardLaw::Bernoulli => (m * (1.0 - m)).sqrt(),
        RewardLaw::Uniform => m.min(1.0 - m) / 3f64.sqrt(),
    }
}

/// Runs `kind` on the config's stochastic model for `cfg.reps`
/// replications.
///
/// Besides bias and regret, each replication tests whether the most-pulled
/// arm has its true mean, with the standardized sum
/// `(Σ y - N μ) / (σ sqrt(N))` referred to the normal distribution.
pub fn run_stochastic(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    epsilon: f64,
) -> Result<StochasticResult> {
    let model = stochastic_model(cfg);
    model.validate()?;
    let means = model.means().expect("stochastic model").to_vec();
    let checkpoints = cfg.checkpoint_rounds();
    struct Rep {
        summary: RepSummary,
        curve: Vec<f64>,
        pvalue: PvalueRow,
    }
    let reps: Vec<Rep> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let seed = rep_seed(cfg.seed, r);
            let mut policy = make_policy(kind, cfg, epsilon, seed)?;
            let record = interact_online(&model, cfg.horizon, &mut policy, seed)?;
            let curve = regret_curve_stochastic(&record, &model, &checkpoints)?;
            let (arm, stat) = adaptive_t_statistic(&record, 0.0)?;
            let mu = means[arm];
            let n = record.arm_counts()[arm] as f64;
            let centred = stat - n.sqrt() * mu;
            let sd = reward_sd(cfg.reward_law, mu);
            let (z, p) = if sd > 0.0 {
                let z = centred / sd;
                (z, normal_two_sided_p(z))
            } else {
                (0.0, 1.0)
            };
            Ok(Rep {
                summary: RepSummary {
                    rep: r,
                    counts: record.arm_counts().to_vec(),
                    sample_means: record.sample_means(),
                    regret: *curve.last().expect("at least one checkpoint"),
                },
                curve,
                pvalue: PvalueRow {
                    rep: r,
                    arm_star: arm,
                    pvalue: Some(p),
                    zstat: Some(z),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut acc = BiasAccumulator::new(&means);
    reps.iter().for_each(|r| acc.push(&r.summary.sample_means));
    let curves: Vec<Vec<f64>> = reps.iter().map(|r| r.curve.clone()).collect();
    let pvalues: Vec<PvalueRow> = reps.iter().map(|r| r.pvalue).collect();
    let corrected = correction_threshold(cfg, kind, epsilon)?;
    Ok(StochasticResult {
        policy: kind,
        epsilon: kind.is_private().then_some(epsilon),
        means,
        bias: acc.report(),
        regret: aggregate_curves(&curves, &checkpoints),
        pvalue_summary: PvalueSummary::new(&pvalues, cfg.alpha, corrected),
        pvalues,
        reps: reps.into_iter().map(|r| r.summary).collect(),
    })
}

/// `γ(α)` for private gathering at `epsilon` over `T` rounds; `None` for
/// non-private policies.
fn correction_threshold(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    epsilon: f64,
) -> Result<Option<f64>> {
    if !kind.is_private() {
        return Ok(None);
    }
    let raw = TestResult::new("threshold", 0.0, 1.0);
    let c = corrected_test(&raw, epsilon, cfg.horizon as u64, cfg.beta, cfg.alpha)?;
    Ok(c.corrected_threshold)
}

/// Linear model with `θ_{i,1} = 0` and the remaining coordinates uniform on
/// the unit sphere of dimension `d - 1`, contexts uniform on the sphere.
pub fn pvalue_model(cfg: &ExperimentConfig, seed: u64) -> RewardModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PARAM_STREAM);
    let thetas = (0..cfg.arms)
        .map(|_| {
            let mut th = vec![0.0; cfg.dim];
            sample_unit_sphere(&mut rng, &mut th[1..]);
            th
        })
        .collect();
    RewardModel::LinearGaussian {
        thetas,
        noise_sd: cfg.noise_sd,
        contexts: ContextGenerator::UniformSphere { dim: cfg.dim },
        clamp: cfg.clamp,
    }
}

/// Gathers data with `kind`, then z-tests `θ_{i*,1} = 0` for the most-pulled
/// arm `i*` by OLS on that arm's observations with known noise sd.
pub fn run_linear_pvalue(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    epsilon: f64,
) -> Result<LinearPvalueResult> {
    if cfg.noise_sd <= 0.0 {
        return Err(Error::Config("the z-test needs noise_sd > 0".into()));
    }
    let checkpoints = cfg.checkpoint_rounds();
    let reps: Vec<(PvalueRow, Vec<f64>)> = (0..cfg.reps)
        .into_par_iter()
        .map(|r| {
            let seed = rep_seed(cfg.seed, r);
            let model = pvalue_model(cfg, seed);
            let tab = generate_tableau(&model, cfg.horizon, seed)?;
            let mut policy = make_policy(kind, cfg, epsilon, seed)?;
            let record = interact_tableau(&tab, &mut policy)?;
            let curve = regret_curve_contextual(&record, &tab, &model, &checkpoints)?;
            let arm = most_pulled_arm(&record).expect("horizon >= 1");
            let mut xtx = DMatrix::<f64>::zeros(cfg.dim, cfg.dim);
            let mut xty = DVector::<f64>::zeros(cfg.dim);
            for (t, (&a, &y)) in record
                .history()
                .choices()
                .iter()
                .zip(record.observed_rewards())
                .enumerate()
            {
                if a == arm {
                    let x = DVector::from_column_slice(
                        tab.round_contexts(t).expect("linear tableau").arm(arm),
                    );
                    xtx.ger(1.0, &x, &x, 1.0);
                    xty.axpy(y, &x, 1.0);
                }
            }
            let row = match z_test_from_moments(&xtx, &xty, 0, 0.0, cfg.noise_sd) {
                Ok(t) => PvalueRow {
                    rep: r,
                    arm_star: arm,
                    pvalue: Some(t.p_value),
                    zstat: Some(t.statistic),
                },
                Err(Error::UntestableCoordinate { .. }) => PvalueRow {
                    rep: r,
                    arm_star: arm,
                    pvalue: None,
                    zstat: None,
                },
                Err(e) => return Err(e),
            };
            Ok((row, curve))
        })
        .collect::<Result<Vec<_>>>()?;
    let pvalues: Vec<PvalueRow> = reps.iter().map(|r| r.0).collect();
    let curves: Vec<Vec<f64>> = reps.into_iter().map(|r| r.1).collect();
    let corrected = correction_threshold(cfg, kind, epsilon)?;
    Ok(LinearPvalueResult {
        policy: kind,
        epsilon: kind.is_private().then_some(epsilon),
        summary: PvalueSummary::new(&pvalues, cfg.alpha, corrected),
        pvalues,
        regret: aggregate_curves(&curves, &checkpoints),
    })
}

/// Linear model for the prediction-bias experiment: `θ_i` and a fixed list of
/// `fixed_contexts` context rows, all drawn from the positive orthant of the
/// unit sphere with the base seed, so mean rewards lie in `[0, 1]`.
pub fn bias_model(cfg: &ExperimentConfig) -> RewardModel {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(PARAM_STREAM);
    let mut orthant = |d: usize| {
        let mut v = vec![0.0; d];
        sample_unit_sphere(&mut rng, &mut v);
        v.iter_mut().for_each(|x| *x = x.abs());
        v
    };
    let thetas = (0..cfg.arms).map(|_| orthant(cfg.dim)).collect();
    let rows = (0..cfg.fixed_contexts)
        .map(|_| (0..cfg.arms).map(|_| orthant(cfg.dim)).collect())
        .collect();
    RewardModel::LinearGaussian {
        thetas,
        noise_sd: cfg.noise_sd,
        contexts: ContextGenerator::Fixed(rows),
        clamp: cfg.clamp,
    }
}

pub fn run_linear_bias(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    epsilon: f64,
) -> Result<LinearBiasResult> {
    let model = bias_model(cfg);
    let gather = match kind {
        PolicyKind::RoundRobin => GatherPolicy::RoundRobin,
        PolicyKind::Oful => GatherPolicy::Oful,
        PolicyKind::LinPriv => GatherPolicy::LinPriv { epsilon },
        other => {
            return Err(Error::Config(format!(
                "policy '{}' cannot gather linear data",
                other.name()
            )))
        }
    };
    let lin = LinUcbConfig {
        arms: cfg.arms,
        dim: cfg.dim,
        horizon: cfg.horizon,
        lambda: cfg.lambda,
        delta: cfg.delta_value(),
        epsilon: None,
    };
    let arms = (0..cfg.arms)
        .map(|i| prediction_bias(&model, &lin, gather, i, cfg.reps, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearBiasResult {
        policy: kind,
        epsilon: kind.is_private().then_some(epsilon),
        thetas: model.thetas().expect("linear model").to_vec(),
        arms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pvalue_model_has_null_first_coordinate() {
        let cfg = ExperimentConfig {
            arms: 3,
            dim: 4,
            ..ExperimentConfig::default()
        };
        let m = pvalue_model(&cfg, 5);
        for th in m.thetas().unwrap() {
            assert_eq!(th[0], 0.0);
            let n: f64 = th.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bias_model_means_in_unit_interval() {
        let cfg = ExperimentConfig {
            arms: 2,
            dim: 3,
            ..ExperimentConfig::default()
        };
        let m = bias_model(&cfg);
        m.validate().unwrap();
        let RewardModel::LinearGaussian {
            contexts: ContextGenerator::Fixed(rows),
            ..
        } = &m
        else {
            panic!("fixed contexts expected")
        };
        for row in rows {
            for (i, x) in row.iter().enumerate() {
                let r = m.expected_reward(i, Some(x));
                assert!((0.0..=1.0).contains(&r));
            }
        }
    }
}
