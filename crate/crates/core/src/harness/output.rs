//! CSV and JSON emission.
//!
//! Files produced, depending on the experiment:
//!
//! * `bias_<policy>.csv`: `arm,bias,se,ci_lo,ci_hi,n_reps` (1-based arms)
//! * `regret.csv`: `t,regret_mean,regret_se,policy`
//! * `pvalues.csv`: `rep,pvalue,zstat,arm_star,policy` (1-based arm; empty
//!   fields for an untestable replication)
//! * `replications.csv`: `rep,policy,arm,count,sample_mean,regret`
//! * `aggregate.csv`: one summary row per policy; columns depend on the
//!   experiment
//! * `sweep.csv`: `epsilon,aggregate_abs_bias,max_abs_bias,regret_mean,regret_se,n_reps`
//! * `linear_bias.csv`: `policy,arm,context,ridge_mean,ridge_se,ols_mean,ols_se`
//! * `manifest.json`: config echo, its SHA-256, file list and wall time
//!
//! Every file except the manifest is a pure function of the config.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::run::{LinearBiasResult, LinearPvalueResult, PvalueRow, RegretPoint, StochasticResult};
use crate::error::{Error, Result};

/// Named file contents produced by one experiment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub files: Vec<(String, String)>,
    /// Short human-readable summary for the terminal.
    pub summary: String,
}

impl ExperimentOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub(crate) fn push(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    /// Writes all files plus `manifest.json` into `dir`.
    ///
    /// Files are first written into a scratch directory next to `dir` and
    /// then renamed into place, so a failure leaves no partial files behind.
    pub fn write_to(&self, dir: &Path, cfg: &ExperimentConfig, wall_secs: f64) -> Result<()> {
        let parent = match dir.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => std::path::PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let scratch = tempfile::Builder::new()
            .prefix(".dpbandit-out-")
            .tempdir_in(&parent)
            .map_err(|e| Error::io(&parent, e))?;
        let mut names: Vec<&str> = Vec::new();
        for (name, contents) in &self.files {
            let p = scratch.path().join(name);
            fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
            names.push(name);
        }
        let manifest = manifest_json(cfg, &names, wall_secs);
        let p = scratch.path().join("manifest.json");
        fs::write(&p, manifest).map_err(|e| Error::io(&p, e))?;
        names.push("manifest.json");

        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for name in names {
            let from = scratch.path().join(name);
            let to = dir.join(name);
            fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
        }
        Ok(())
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical_text().as_bytes());
    digest.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn manifest_json(cfg: &ExperimentConfig, files: &[&str], wall_secs: f64) -> String {
    let v = serde_json::json!({
        "tool": "dpbandit",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "config_text": cfg.canonical_text(),
        "config_sha256": config_hash(cfg),
        "files": files,
        "wall_time_secs": wall_secs,
    });
    serde_json::to_string_pretty(&v).expect("plain data serializes")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn bias_csv(res: &StochasticResult) -> String {
    let mut buf = Vec::new();
    res.bias.write_csv(&mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

pub(crate) fn regret_rows(s: &mut String, policy: &str, points: &[RegretPoint]) {
    for p in points {
        let _ = writeln!(s, "{},{},{},{policy}", p.t, p.mean, p.se);
    }
}

pub(crate) const REGRET_HEADER: &str = "t,regret_mean,regret_se,policy\n";
pub(crate) const PVALUE_HEADER: &str = "rep,pvalue,zstat,arm_star,policy\n";

pub(crate) fn pvalue_rows(s: &mut String, policy: &str, rows: &[PvalueRow]) {
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{policy}",
            r.rep,
            opt(r.pvalue),
            opt(r.zstat),
            r.arm_star + 1
        );
    }
}

pub(crate) fn replication_rows(s: &mut String, res: &StochasticResult) {
    let name = res.policy.name();
    for rep in &res.reps {
        for (arm, (n, m)) in rep.counts.iter().zip(&rep.sample_means).enumerate() {
            let _ = writeln!(
                s,
                "{},{name},{},{n},{},{}",
                rep.rep,
                arm + 1,
                opt(*m),
                rep.regret
            );
        }
    }
}

pub(crate) const STOCH_AGG_HEADER: &str = "policy,epsilon,aggregate_abs_bias,max_bias_arm,max_bias,max_bias_se,regret_mean,regret_se,frac_p_below_alpha,corrected_threshold,frac_p_below_corrected,n_reps\n";

pub(crate) fn stochastic_aggregate_row(s: &mut String, res: &StochasticResult) {
    let worst = res.bias.most_biased();
    let last = res.regret.last().expect("at least one checkpoint");
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        res.policy.name(),
        opt(res.epsilon),
        res.bias.aggregate,
        worst.map(|a| (a.arm + 1).to_string()).unwrap_or_default(),
        opt(worst.map(|a| a.bias)),
        opt(worst.map(|a| a.se)),
        last.mean,
        last.se,
        res.pvalue_summary.frac_below_alpha,
        opt(res.pvalue_summary.corrected_threshold),
        opt(res.pvalue_summary.frac_below_corrected),
        res.reps.len()
    );
}

pub(crate) const LINEAR_PVALUE_AGG_HEADER: &str = "policy,epsilon,testable,untestable,alpha,frac_p_below_alpha,corrected_threshold,frac_p_below_corrected,regret_mean,regret_se\n";

pub(crate) fn linear_pvalue_aggregate_row(s: &mut String, res: &LinearPvalueResult) {
    let sm = &res.summary;
    let last = res.regret.last().expect("at least one checkpoint");
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{},{},{}",
        res.policy.name(),
        opt(res.epsilon),
        sm.testable,
        sm.untestable,
        sm.alpha,
        sm.frac_below_alpha,
        opt(sm.corrected_threshold),
        opt(sm.frac_below_corrected),
        last.mean,
        last.se
    );
}

pub(crate) const LINEAR_BIAS_HEADER: &str =
    "policy,arm,context,ridge_mean,ridge_se,ols_mean,ols_se\n";
pub(crate) const LINEAR_BIAS_AGG_HEADER: &str =
    "policy,epsilon,arm,ridge_max_bias,ridge_se,ols_max_bias,ols_se,reps,pulled_reps,ols_reps\n";

pub(crate) fn linear_bias_rows(detail: &mut String, agg: &mut String, res: &LinearBiasResult) {
    let name = res.policy.name();
    for pb in &res.arms {
        for (c, cb) in pb.contexts.iter().enumerate() {
            let _ = writeln!(
                detail,
                "{name},{},{},{},{},{},{}",
                pb.arm + 1,
                c + 1,
                cb.ridge_mean,
                cb.ridge_se,
                opt(cb.ols_mean),
                opt(cb.ols_se)
            );
        }
        let _ = writeln!(
            agg,
            "{name},{},{},{},{},{},{},{},{},{}",
            opt(res.epsilon),
            pb.arm + 1,
            pb.ridge_max.bias,
            pb.ridge_max.se,
            opt(pb.ols_max.map(|m| m.bias)),
            opt(pb.ols_max.map(|m| m.se)),
            pb.reps,
            pb.ridge_reps,
            pb.ols_reps
        );
    }
}

pub(crate) const SWEEP_HEADER: &str =
    "epsilon,aggregate_abs_bias,max_abs_bias,regret_mean,regret_se,n_reps\n";

pub(crate) fn sweep_row(s: &mut String, res: &StochasticResult) {
    let last = res.regret.last().expect("at least one checkpoint");
    let max = res.bias.most_biased().map(|a| a.bias.abs());
    let _ = writeln!(
        s,
        "{},{},{},{},{},{}",
        opt(res.epsilon),
        res.bias.aggregate,
        opt(max),
        last.mean,
        last.se,
        res.reps.len()
    );
}
