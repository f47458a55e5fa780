use std::io::Write;

use serde::Serialize;

use super::MeanSe;
use crate::error::{Error, Result};
use crate::interact::RunRecord;
use crate::model::RewardModel;

/// Bias of one arm's sample mean over replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArmBias {
    pub arm: usize,
    pub bias: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_reps: u64,
}

impl ArmBias {
    pub fn ci_contains(&self, v: f64) -> bool {
        self.ci_lo <= v && v <= self.ci_hi
    }
}

/// Per-arm bias of sample means with normal-approximation 95% intervals.
/// Arms that were never pulled are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    pub arms: Vec<Option<ArmBias>>,
    /// Mean of `|bias|` over the arms that are present.
    pub aggregate: f64,
}

impl BiasReport {
    pub fn present(&self) -> impl Iterator<Item = &ArmBias> {
        self.arms.iter().flatten()
    }

    /// The present arm with the largest `|bias|`.
    pub fn most_biased(&self) -> Option<&ArmBias> {
        self.present()
            .fold(None, |best: Option<&ArmBias>, a| match best {
                Some(b) if b.bias.abs() >= a.bias.abs() => Some(b),
                _ => Some(a),
            })
    }

    /// CSV with header `arm,bias,se,ci_lo,ci_hi,n_reps`; arms are 1-based and
    /// never-pulled arms are left out.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "arm,bias,se,ci_lo,ci_hi,n_reps")?;
        for a in self.present() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                a.arm + 1,
                a.bias,
                a.se,
                a.ci_lo,
                a.ci_hi,
                a.n_reps
            )?;
        }
        Ok(())
    }
}

/// Streams per-run sample means into a [`BiasReport`] without keeping the
/// runs around.
#[derive(Debug, Clone)]
pub struct BiasAccumulator {
    means: Vec<f64>,
    acc: Vec<MeanSe>,
}

impl BiasAccumulator {
    pub fn new(true_means: &[f64]) -> Self {
        BiasAccumulator {
            means: true_means.to_vec(),
            acc: vec![MeanSe::new(); true_means.len()],
        }
    }

    /// Adds one run's sample means (`None` for unpulled arms).
    pub fn push(&mut self, sample_means: &[Option<f64>]) {
        for ((acc, &mu), m) in self.acc.iter_mut().zip(&self.means).zip(sample_means) {
            if let Some(m) = m {
                acc.push(m - mu);
            }
        }
    }

    pub fn push_record(&mut self, record: &RunRecord) {
        self.push(&record.sample_means());
    }

    pub fn report(&self) -> BiasReport {
        let arms: Vec<Option<ArmBias>> = self
            .acc
            .iter()
            .enumerate()
            .map(|(arm, a)| {
                (a.count() > 0).then(|| {
                    let se = a.se();
                    ArmBias {
                        arm,
                        bias: a.mean(),
                        se,
                        ci_lo: a.mean() - 1.96 * se,
                        ci_hi: a.mean() + 1.96 * se,
                        n_reps: a.count(),
                    }
                })
            })
            .collect();
        let present: Vec<f64> = arms.iter().flatten().map(|a| a.bias.abs()).collect();
        let aggregate = if present.is_empty() {
            f64::NAN
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        };
        BiasReport { arms, aggregate }
    }
}

/// Per-arm mean of `Ŷ_i - μ_i` over the runs that pulled arm `i`.
pub fn estimate_bias(runs: &[RunRecord], model: &RewardModel) -> Result<BiasReport> {
    let means = model
        .means()
        .ok_or_else(|| Error::invalid("bias estimation needs a stochastic model"))?;
    if runs.len() < 2 {
        return Err(Error::invalid("bias estimation needs at least two runs"));
    }
    let mut acc = BiasAccumulator::new(means);
    for r in runs {
        if r.arms() != means.len() {
            return Err(Error::invalid("run and model disagree on arm count"));
        }
        acc.push_record(r);
    }
    Ok(acc.report())
}
