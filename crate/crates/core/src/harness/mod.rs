//! Seeded Monte Carlo experiments driven by a config file.
//!
//! [`run_experiment`] validates a config, runs every replication on a rayon
//! pool of `threads` workers, aggregates in replication order and returns the
//! output files in memory; [`ExperimentOutput::write_to`] puts them on disk.

pub mod config;
pub mod output;
pub mod run;

use std::fmt::Write as _;
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentKind, PolicyKind, RewardLaw};
pub use output::{config_hash, ExperimentOutput};
pub use run::{
    bias_model, make_policy, pvalue_model, run_linear_bias, run_linear_pvalue, run_stochastic,
    stochastic_model, LinearBiasResult, LinearPvalueResult, PvalueRow, PvalueSummary, RegretPoint,
    RepSummary, StochasticResult,
};

use crate::error::{Error, Result};
use output::*;

/// Runs `f` on a pool with `threads` workers (0 means rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Validates `cfg` and runs it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    with_threads(cfg.threads, || run_validated(cfg))?
}

/// Runs `cfg` and writes its outputs to `cfg.out`. Returns the output and
/// the wall time in seconds.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<(ExperimentOutput, f64)> {
    let start = Instant::now();
    let out = run_experiment(cfg)?;
    let secs = start.elapsed().as_secs_f64();
    out.write_to(&cfg.out, cfg, secs)?;
    Ok((out, secs))
}

fn run_validated(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut out = ExperimentOutput::default();
    match cfg.experiment {
        ExperimentKind::StochBias | ExperimentKind::StochRegret => {
            let bias = cfg.experiment == ExperimentKind::StochBias;
            let mut agg = String::from(STOCH_AGG_HEADER);
            let mut regret = String::from(REGRET_HEADER);
            let mut pvalues = String::from(PVALUE_HEADER);
            let mut reps = String::from("rep,policy,arm,count,sample_mean,regret\n");
            for &p in &cfg.policies {
                let res = run_stochastic(cfg, p, cfg.epsilon)?;
                stochastic_aggregate_row(&mut agg, &res);
                regret_rows(&mut regret, p.name(), &res.regret);
                let last = res.regret.last().expect("checkpoint");
                let _ = writeln!(
                    out.summary,
                    "{:<10} aggregate |bias| {:.5}  regret@{} {:.2} (se {:.2})",
                    p.name(),
                    res.bias.aggregate,
                    last.t,
                    last.mean,
                    last.se
                );
                if bias {
                    out.push(format!("bias_{}.csv", p.name()), bias_csv(&res));
                    pvalue_rows(&mut pvalues, p.name(), &res.pvalues);
                    replication_rows(&mut reps, &res);
                }
            }
            out.push("aggregate.csv", agg);
            out.push("regret.csv", regret);
            if bias {
                out.push("pvalues.csv", pvalues);
                out.push("replications.csv", reps);
            }
        }
        ExperimentKind::LinearPvalue => {
            let mut agg = String::from(LINEAR_PVALUE_AGG_HEADER);
            let mut regret = String::from(REGRET_HEADER);
            let mut pvalues = String::from(PVALUE_HEADER);
            for &p in &cfg.policies {
                let res = run_linear_pvalue(cfg, p, cfg.epsilon)?;
                linear_pvalue_aggregate_row(&mut agg, &res);
                regret_rows(&mut regret, p.name(), &res.regret);
                pvalue_rows(&mut pvalues, p.name(), &res.pvalues);
                let _ = write!(
                    out.summary,
                    "{:<10} fraction p <= {} : {:.4} ({} testable)",
                    p.name(),
                    res.summary.alpha,
                    res.summary.frac_below_alpha,
                    res.summary.testable
                );
                if let (Some(g), Some(f)) = (
                    res.summary.corrected_threshold,
                    res.summary.frac_below_corrected,
                ) {
                    let _ = write!(out.summary, "; corrected threshold {g:.5}, fraction {f:.4}");
                }
                out.summary.push('\n');
            }
            out.push("aggregate.csv", agg);
            out.push("regret.csv", regret);
            out.push("pvalues.csv", pvalues);
        }
        ExperimentKind::LinearBias => {
            let mut detail = String::from(LINEAR_BIAS_HEADER);
            let mut agg = String::from(LINEAR_BIAS_AGG_HEADER);
            for &p in &cfg.policies {
                let res = run_linear_bias(cfg, p, cfg.epsilon)?;
                linear_bias_rows(&mut detail, &mut agg, &res);
                for pb in &res.arms {
                    let _ = writeln!(
                        out.summary,
                        "{:<10} arm {} max ridge bias {:+.5} (se {:.5})",
                        p.name(),
                        pb.arm + 1,
                        pb.ridge_max.bias,
                        pb.ridge_max.se
                    );
                }
            }
            out.push("linear_bias.csv", detail);
            out.push("aggregate.csv", agg);
        }
        ExperimentKind::Sweep => {
            let mut sweep = String::from(SWEEP_HEADER);
            let kind = cfg
                .policies
                .iter()
                .copied()
                .find(|p| p.is_private())
                .unwrap_or(PolicyKind::PrivUcb);
            for &eps in &cfg.epsilons {
                let res = run_stochastic(cfg, kind, eps)?;
                sweep_row(&mut sweep, &res);
                let _ = writeln!(
                    out.summary,
                    "eps {eps:<8} aggregate |bias| {:.5}",
                    res.bias.aggregate
                );
            }
            out.push("sweep.csv", sweep);
        }
    }
    Ok(out)
}
