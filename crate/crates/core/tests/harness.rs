//! Experiment harness: determinism, thread independence and output files.

use std::fs;

use dpbandit::harness::{self, ExperimentConfig, ExperimentKind, PolicyKind};
use dpbandit::Error;

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        experiment: kind,
        arms: 3,
        horizon: 60,
        dim: 2,
        gap: 0.2,
        reps: 24,
        seed: 9,
        checkpoints: 6,
        ..ExperimentConfig::default()
    };
    cfg.policies = match kind {
        ExperimentKind::LinearPvalue => vec![PolicyKind::Oful, PolicyKind::LinPriv],
        ExperimentKind::LinearBias => vec![PolicyKind::RoundRobin, PolicyKind::LinPriv],
        _ => vec![PolicyKind::Ucb, PolicyKind::PrivUcb],
    };
    cfg.epsilons = vec![0.1, 1.0];
    cfg
}

const KINDS: [ExperimentKind; 5] = [
    ExperimentKind::StochBias,
    ExperimentKind::StochRegret,
    ExperimentKind::LinearPvalue,
    ExperimentKind::LinearBias,
    ExperimentKind::Sweep,
];

#[test]
fn outputs_are_deterministic_and_thread_independent() {
    for kind in KINDS {
        let one = ExperimentConfig {
            threads: 1,
            ..small(kind)
        };
        let three = ExperimentConfig {
            threads: 3,
            ..small(kind)
        };
        let a = harness::run_experiment(&one).unwrap();
        let b = harness::run_experiment(&one).unwrap();
        let c = harness::run_experiment(&three).unwrap();
        assert_eq!(a.files, b.files, "{kind:?} repeat");
        assert_eq!(a.files, c.files, "{kind:?} threads");
        assert!(!a.files.is_empty());
    }
}

#[test]
fn seeds_change_the_outputs() {
    let a = harness::run_experiment(&small(ExperimentKind::StochBias)).unwrap();
    let b = harness::run_experiment(&ExperimentConfig {
        seed: 10,
        ..small(ExperimentKind::StochBias)
    })
    .unwrap();
    assert_ne!(a.file("bias_ucb.csv"), b.file("bias_ucb.csv"));
}

#[test]
fn csv_schemas_match_the_plotting_contract() {
    let out = harness::run_experiment(&small(ExperimentKind::StochBias)).unwrap();
    let header = |name: &str| out.file(name).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header("bias_ucb.csv"), "arm,bias,se,ci_lo,ci_hi,n_reps");
    assert_eq!(header("bias_privucb.csv"), "arm,bias,se,ci_lo,ci_hi,n_reps");
    assert_eq!(header("regret.csv"), "t,regret_mean,regret_se,policy");
    assert_eq!(header("pvalues.csv"), "rep,pvalue,zstat,arm_star,policy");
    assert_eq!(header("replications.csv"), "rep,policy,arm,count,sample_mean,regret");

    // One row per arm, 1-based, and the first arm has no bias at all under
    // these means only if never pulled; all arms are pulled here.
    let bias = out.file("bias_ucb.csv").unwrap();
    let arms: Vec<&str> = bias.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(arms, ["1", "2", "3"]);

    // Regret rows per policy at every checkpoint, ending at T.
    let regret = out.file("regret.csv").unwrap();
    let ucb_rows: Vec<&str> = regret.lines().filter(|l| l.ends_with(",ucb")).collect();
    assert_eq!(ucb_rows.len(), 6);
    assert!(ucb_rows.last().unwrap().starts_with("60,"));

    // One p-value row per replication and policy.
    assert_eq!(out.file("pvalues.csv").unwrap().lines().count(), 1 + 2 * 24);

    let sweep = harness::run_experiment(&small(ExperimentKind::Sweep)).unwrap();
    let s = sweep.file("sweep.csv").unwrap();
    assert_eq!(
        s.lines().next().unwrap(),
        "epsilon,aggregate_abs_bias,max_abs_bias,regret_mean,regret_se,n_reps"
    );
    assert_eq!(s.lines().count(), 3);
}

#[test]
fn write_to_creates_files_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        out: dir.path().join("run"),
        ..small(ExperimentKind::StochRegret)
    };
    let (out, _) = harness::run_and_write(&cfg).unwrap();
    for (name, contents) in &out.files {
        assert_eq!(&fs::read_to_string(cfg.out.join(name)).unwrap(), contents);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"], harness::config_hash(&cfg));
    assert_eq!(
        manifest["files"].as_array().unwrap().len(),
        out.files.len()
    );
    let echoed = ExperimentConfig::parse_text(manifest["config_text"].as_str().unwrap()).unwrap();
    assert_eq!(echoed, cfg);

    // Rewriting replaces the directory contents wholesale.
    harness::run_and_write(&cfg).unwrap();
    let leftovers = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with('.'))
        .count();
    assert_eq!(leftovers, 0);
}

#[test]
fn invalid_configs_are_rejected_before_running() {
    let bad = [
        "armz = 3",
        "arms = 3\narms = 4",
        "arms = three",
        "experiment = nonsense",
        "policies = ucb,unknown",
        "no equals sign",
    ];
    for text in bad {
        assert!(
            matches!(ExperimentConfig::parse_text(text), Err(Error::Config(_))),
            "{text:?} parsed"
        );
    }
    let contextual_policy_on_stochastic = ExperimentConfig {
        policies: vec![PolicyKind::Oful],
        ..small(ExperimentKind::StochBias)
    };
    assert!(matches!(
        harness::run_experiment(&contextual_policy_on_stochastic),
        Err(Error::Config(_))
    ));
    let zero_reps = ExperimentConfig {
        reps: 0,
        ..small(ExperimentKind::StochBias)
    };
    assert!(matches!(harness::run_experiment(&zero_reps), Err(Error::Config(_))));
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::parse_text(&fs::read_to_string(&path).unwrap()).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(ExperimentConfig::parse_text(&cfg.canonical_text()).unwrap(), cfg);
        n += 1;
    }
    assert!(n >= 5);
}
