//! Quick invariant checks run by `dpbandit selftest`.

use crate::harness::{make_policy, pvalue_model, ExperimentConfig, PolicyKind};
use crate::interact::{interact_online, interact_tableau};
use crate::linear::ArmRegressionState;
use crate::model::{generate_tableau, RewardModel};
use crate::privacy::{decomposition, laplace_inv_cdf, noise_bound, TreeCounter};
use crate::stats::{max_info_bound, pvalue_correction};
use crate::stochastic::ucb_index;

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub outcome: Result<(), String>,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(), String>) -> Check {
    Check { name, outcome: f() }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    if (a - b).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {a}, expected {b}"))
    }
}

/// Runs every check.
pub fn run_all() -> Vec<Check> {
    vec![
        check("dyadic decomposition tiles every prefix up to 1024", || {
            for t in 1..=1024u64 {
                let nodes = decomposition(t);
                let mut next = 1;
                for n in &nodes {
                    if n.start != next {
                        return Err(format!("gap before node {n:?} at t={t}"));
                    }
                    next = n.end + 1;
                }
                if next != t + 1 {
                    return Err(format!("decomposition of {t} ends at {}", next - 1));
                }
                let cap = 2 * (t as f64).log2().ceil() as usize + 1;
                if nodes.len() > cap {
                    return Err(format!("{} nodes at t={t}, cap {cap}", nodes.len()));
                }
            }
            Ok(())
        }),
        check("noise-free counter releases exact sums", || {
            let mut c = TreeCounter::without_noise();
            let mut sum = 0.0;
            for i in 0..300 {
                let y = (i % 5) as f64 / 4.0;
                sum += y;
                c.add(y).map_err(|e| e.to_string())?;
                close(
                    c.release().map_err(|e| e.to_string())?,
                    sum,
                    1e-9,
                    "release",
                )?;
            }
            Ok(())
        }),
        check("noise bound at t=1 is the Laplace tail radius", || {
            let r = noise_bound(1, 0.5, 0.05).map_err(|e| e.to_string())?;
            close(r, (1.0f64 / 0.05).ln() / 0.5, 1e-12, "radius")
        }),
        check("Laplace quantile reference values", || {
            close(
                laplace_inv_cdf(0.75, 1.0).unwrap(),
                2f64.ln(),
                1e-12,
                "u=0.75",
            )?;
            close(
                laplace_inv_cdf(0.25, 2.0).unwrap(),
                -2.0 * 2f64.ln(),
                1e-12,
                "u=0.25",
            )
        }),
        check("UCB index reference value", || {
            close(
                ucb_index(0.5, 10, 100, 0.05),
                1.7329559975556,
                1e-9,
                "index",
            )
        }),
        check("ridge solve with one observation", || {
            let mut st = ArmRegressionState::new(1, 1.0).map_err(|e| e.to_string())?;
            st.update(&[1.0], 1.0).map_err(|e| e.to_string())?;
            close(st.ridge_estimate()[0], 0.5, 1e-12, "theta")
        }),
        check("max-information and correction reference values", || {
            close(
                max_info_bound(0.0, 100, 0.1).unwrap(),
                0.0,
                0.0,
                "k at eps=0",
            )?;
            close(pvalue_correction(0.05, 0.01, 2.0), 0.01, 1e-15, "gamma")
        }),
        check("online and tableau drivers agree on 50 seeds", || {
            let stoch = RewardModel::BernoulliArms {
                means: vec![0.9, 0.6, 0.5],
            };
            let cfg = ExperimentConfig {
                arms: 3,
                dim: 3,
                horizon: 60,
                epsilon: 1.0,
                ..ExperimentConfig::default()
            };
            for seed in 0..50 {
                for kind in [
                    PolicyKind::Ucb,
                    PolicyKind::PrivUcb,
                    PolicyKind::Oful,
                    PolicyKind::LinPriv,
                ] {
                    let model = if kind.is_contextual() {
                        pvalue_model(&cfg, seed)
                    } else {
                        stoch.clone()
                    };
                    let run = |online: bool| {
                        let mut p = make_policy(kind, &cfg, cfg.epsilon, seed)?;
                        if online {
                            interact_online(&model, cfg.horizon, &mut p, seed)
                        } else {
                            interact_tableau(&generate_tableau(&model, cfg.horizon, seed)?, &mut p)
                        }
                    };
                    let a = run(true).map_err(|e| e.to_string())?;
                    let b = run(false).map_err(|e| e.to_string())?;
                    if a != b {
                        return Err(format!("{} differs at seed {seed}", kind.name()));
                    }
                    if a.arm_counts().iter().sum::<u64>() != cfg.horizon as u64 {
                        return Err("arm counts do not sum to T".into());
                    }
                }
            }
            Ok(())
        }),
    ]
}
