//! The experiment configuration file.
//!
//! One `key = value` pair per line; `#` starts a comment; blank lines are
//! ignored. Every key is optional and has a default, but unknown or repeated
//! keys are errors. Command-line overrides use the same `key=value` syntax.
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `experiment` | `stoch-bias`, `stoch-regret`, `linear-pvalue`, `linear-bias` or `sweep` | `stoch-bias` |
//! | `arms` | number of arms `K` | 20 |
//! | `horizon` | rounds `T` | 500 |
//! | `dim` | context dimension `d` | 5 |
//! | `gap` | spacing `Δ` of stochastic arm means | 0.05 |
//! | `top_mean` | mean of the best stochastic arm | 1.0 |
//! | `reward_law` | `bernoulli` or `uniform` | `bernoulli` |
//! | `policies` | comma list of `ucb`, `privucb`, `uniform`, `roundrobin`, `greedy`, `oful`, `linpriv` | `ucb,privucb` |
//! | `epsilon` | privacy budget of the private policies | 0.05 |
//! | `epsilons` | comma list of budgets for `sweep` | `0.01,0.05,0.5,5,400` |
//! | `lambda` | ridge parameter, at least 1 | 1.0 |
//! | `delta` | confidence parameter; `auto` means `1/T` (`1/2` at `T = 1`) | `auto` |
//! | `alpha` | test level | 0.05 |
//! | `beta` | max-information slack | 0.01 |
//! | `noise_sd` | reward noise of linear models | 1.0 |
//! | `clamp` | clamp linear rewards to `[0, 1]` | `false` |
//! | `fixed_contexts` | size of the fixed context list in `linear-bias` | 4 |
//! | `reps` | Monte Carlo replications | 100 |
//! | `seed` | base seed; replication `r` uses `seed + r` | 1 |
//! | `threads` | worker threads, 0 for all cores | 0 |
//! | `checkpoints` | number of evenly spaced regret checkpoints | 20 |
//! | `out` | output directory | `out` |

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    StochBias,
    StochRegret,
    LinearPvalue,
    LinearBias,
    Sweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::StochBias => "stoch-bias",
            ExperimentKind::StochRegret => "stoch-regret",
            ExperimentKind::LinearPvalue => "linear-pvalue",
            ExperimentKind::LinearBias => "linear-bias",
            ExperimentKind::Sweep => "sweep",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "stoch-bias" => ExperimentKind::StochBias,
            "stoch-regret" => ExperimentKind::StochRegret,
            "linear-pvalue" => ExperimentKind::LinearPvalue,
            "linear-bias" => ExperimentKind::LinearBias,
            "sweep" => ExperimentKind::Sweep,
            _ => return Err(Error::Config(format!("unknown experiment '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardLaw {
    Bernoulli,
    Uniform,
}

impl FromStr for RewardLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(RewardLaw::Bernoulli),
            "uniform" => Ok(RewardLaw::Uniform),
            _ => Err(Error::Config(format!("unknown reward law '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Ucb,
    PrivUcb,
    Uniform,
    RoundRobin,
    Greedy,
    Oful,
    LinPriv,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ucb => "ucb",
            PolicyKind::PrivUcb => "privucb",
            PolicyKind::Uniform => "uniform",
            PolicyKind::RoundRobin => "roundrobin",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Oful => "oful",
            PolicyKind::LinPriv => "linpriv",
        }
    }

    pub fn is_private(self) -> bool {
        matches!(self, PolicyKind::PrivUcb | PolicyKind::LinPriv)
    }

    pub fn is_contextual(self) -> bool {
        matches!(self, PolicyKind::Oful | PolicyKind::LinPriv)
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ucb" => PolicyKind::Ucb,
            "privucb" => PolicyKind::PrivUcb,
            "uniform" => PolicyKind::Uniform,
            "roundrobin" => PolicyKind::RoundRobin,
            "greedy" => PolicyKind::Greedy,
            "oful" => PolicyKind::Oful,
            "linpriv" => PolicyKind::LinPriv,
            _ => return Err(Error::Config(format!("unknown policy '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub arms: usize,
    pub horizon: usize,
    pub dim: usize,
    pub gap: f64,
    pub top_mean: f64,
    pub reward_law: RewardLaw,
    pub policies: Vec<PolicyKind>,
    pub epsilon: f64,
    pub epsilons: Vec<f64>,
    pub lambda: f64,
    pub delta: Option<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub noise_sd: f64,
    pub clamp: bool,
    pub fixed_contexts: usize,
    pub reps: usize,
    pub seed: u64,
    pub threads: usize,
    pub checkpoints: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::StochBias,
            arms: 20,
            horizon: 500,
            dim: 5,
            gap: 0.05,
            top_mean: 1.0,
            reward_law: RewardLaw::Bernoulli,
            policies: vec![PolicyKind::Ucb, PolicyKind::PrivUcb],
            epsilon: 0.05,
            epsilons: vec![0.01, 0.05, 0.5, 5.0, 400.0],
            lambda: 1.0,
            delta: None,
            alpha: 0.05,
            beta: 0.01,
            noise_sd: 1.0,
            clamp: false,
            fixed_contexts: 4,
            reps: 100,
            seed: 1,
            threads: 0,
            checkpoints: 20,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for key '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parses a config file's text on top of the defaults.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", n + 1)))?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(Error::Config(format!(
                    "line {}: repeated key '{key}'",
                    n + 1
                )));
            }
            cfg.set(key, value.trim())?;
            seen.push(key.to_string());
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = value.parse()?,
            "arms" => self.arms = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "gap" => self.gap = parse(key, value)?,
            "top_mean" => self.top_mean = parse(key, value)?,
            "reward_law" => self.reward_law = value.parse()?,
            "policies" => {
                self.policies = value
                    .split(',')
                    .map(|v| v.trim().parse())
                    .collect::<Result<_>>()?
            }
            "epsilon" => self.epsilon = parse(key, value)?,
            "epsilons" => self.epsilons = parse_list(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "delta" => {
                self.delta = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "noise_sd" => self.noise_sd = parse(key, value)?,
            "clamp" => self.clamp = parse(key, value)?,
            "fixed_contexts" => self.fixed_contexts = parse(key, value)?,
            "reps" => self.reps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "checkpoints" => self.checkpoints = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Checks every parameter before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.arms == 0 || self.horizon < 2 || self.reps == 0 {
            return fail("arms >= 1, horizon >= 2 and reps >= 1 are required".into());
        }
        if self.policies.is_empty() {
            return fail("no policies given".into());
        }
        let contextual = matches!(
            self.experiment,
            ExperimentKind::LinearPvalue | ExperimentKind::LinearBias
        );
        for &p in &self.policies {
            let ok = match p {
                PolicyKind::Oful | PolicyKind::LinPriv => contextual,
                PolicyKind::RoundRobin => true,
                _ => !contextual,
            };
            if !ok {
                return fail(format!(
                    "policy '{}' does not apply to experiment '{}'",
                    p.name(),
                    self.experiment.name()
                ));
            }
        }
        if !contextual {
            let low = self.top_mean - (self.arms - 1) as f64 * self.gap;
            if !(self.top_mean <= 1.0 && low >= 0.0 && self.gap >= 0.0) {
                return fail(format!(
                    "arm means {}..{low} must lie in [0, 1]",
                    self.top_mean
                ));
            }
        } else {
            if self.dim < 2 {
                return fail("linear experiments need dim >= 2".into());
            }
            if !(self.lambda >= 1.0) {
                return fail("lambda must be at least 1".into());
            }
            if !(self.noise_sd >= 0.0) {
                return fail("noise_sd must be non-negative".into());
            }
        }
        if self.experiment == ExperimentKind::LinearBias && self.fixed_contexts == 0 {
            return fail("fixed_contexts must be positive".into());
        }
        if !(self.epsilon > 0.0) || self.epsilons.iter().any(|&e| !(e > 0.0)) {
            return fail("privacy budgets must be positive".into());
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return fail("delta must lie in (0, 1)".into());
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(self.beta > 0.0 && self.beta < 1.0) {
            return fail("alpha must lie in [0, 1] and beta in (0, 1)".into());
        }
        if self.checkpoints == 0 || self.checkpoints > self.horizon {
            return fail("checkpoints must lie in 1..=horizon".into());
        }
        Ok(())
    }

    /// The confidence parameter, `1/T` unless set (`1/2` when `T = 1`, so it
    /// stays inside `(0, 1)`).
    pub fn delta_value(&self) -> f64 {
        self.delta.unwrap_or(1.0 / self.horizon.max(2) as f64)
    }

    /// Canonical text of every setting, in a fixed key order. Parsing it
    /// gives back an equal config.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("experiment", self.experiment.name().into());
        line("arms", self.arms.to_string());
        line("horizon", self.horizon.to_string());
        line("dim", self.dim.to_string());
        line("gap", self.gap.to_string());
        line("top_mean", self.top_mean.to_string());
        line(
            "reward_law",
            match self.reward_law {
                RewardLaw::Bernoulli => "bernoulli".into(),
                RewardLaw::Uniform => "uniform".into(),
            },
        );
        line(
            "policies",
            self.policies
                .iter()
                .map(|p| p.name())
                .collect::<Vec<_>>()
                .join(","),
        );
        line("epsilon", self.epsilon.to_string());
        line("epsilons", join(&self.epsilons));
        line("lambda", self.lambda.to_string());
        line(
            "delta",
            self.delta.map_or_else(|| "auto".into(), |d| d.to_string()),
        );
        line("alpha", self.alpha.to_string());
        line("beta", self.beta.to_string());
        line("noise_sd", self.noise_sd.to_string());
        line("clamp", self.clamp.to_string());
        line("fixed_contexts", self.fixed_contexts.to_string());
        line("reps", self.reps.to_string());
        line("seed", self.seed.to_string());
        line("threads", self.threads.to_string());
        line("checkpoints", self.checkpoints.to_string());
        line("out", self.out.display().to_string());
        s
    }

    /// Evenly spaced regret checkpoints ending at `T`.
    pub fn checkpoint_rounds(&self) -> Vec<usize> {
        let n = self.checkpoints;
        let mut v: Vec<usize> = (1..=n).map(|k| self.horizon * k / n).collect();
        v.dedup();
        v.retain(|&t| t > 0);
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "# comment\nexperiment = sweep\narms = 5 # trailing\nhorizon=1000\npolicies = ucb, privucb\ndelta = 0.01\n";
        let cfg = ExperimentConfig::parse_text(text).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Sweep);
        assert_eq!(cfg.arms, 5);
        assert_eq!(cfg.delta, Some(0.01));
        let again = ExperimentConfig::parse_text(&cfg.canonical_text()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn unknown_and_repeated_keys_rejected() {
        assert!(matches!(
            ExperimentConfig::parse_text("armz = 3"),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::parse_text("arms = 3\narms = 4").is_err());
        assert!(ExperimentConfig::parse_text("arms = three").is_err());
        assert!(ExperimentConfig::parse_text("just words").is_err());
    }

    #[test]
    fn validation_catches_bad_means() {
        let mut cfg = ExperimentConfig::default();
        cfg.arms = 30;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.policies = vec![PolicyKind::Oful];
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn checkpoints_end_at_horizon() {
        let mut cfg = ExperimentConfig::default();
        cfg.horizon = 100;
        cfg.checkpoints = 4;
        assert_eq!(cfg.checkpoint_rounds(), vec![25, 50, 75, 100]);
    }
}
