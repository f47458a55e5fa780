//! Property tests over randomly drawn instances.

use nalgebra::SymmetricEigen;
use proptest::prelude::*;

use dpbandit::harness::{make_policy, pvalue_model, ExperimentConfig, PolicyKind};
use dpbandit::interact::pseudo_regret_stochastic;
use dpbandit::linear::{ArmRegressionState, LinUcb, LinUcbConfig};
use dpbandit::privacy::{decomposition, laplace_inv_cdf, noise_bound, TreeCounter};
use dpbandit::stats::{max_info_bound, pvalue_correction, BiasAccumulator};
use dpbandit::stochastic::{PrivUcb, Ucb};
use dpbandit::{generate_tableau, interact_online, interact_tableau, RewardModel};

const STOCHASTIC: [PolicyKind; 5] = [
    PolicyKind::Ucb,
    PolicyKind::PrivUcb,
    PolicyKind::Uniform,
    PolicyKind::RoundRobin,
    PolicyKind::Greedy,
];

fn unit_vec(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim).prop_map(|v| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1.0 {
            v.iter().map(|x| x / n).collect()
        } else {
            v
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stochastic_runs_conserve_pulls_and_read_the_tableau(
        means in prop::collection::vec(0.0f64..=1.0, 1..6),
        horizon in 1usize..120,
        kind in prop::sample::select(STOCHASTIC.to_vec()),
        seed in any::<u64>(),
    ) {
        let cfg = ExperimentConfig { arms: means.len(), horizon, epsilon: 0.5, ..ExperimentConfig::default() };
        let model = RewardModel::BernoulliArms { means: means.clone() };
        let tab = generate_tableau(&model, horizon, seed).unwrap();
        let mut p = make_policy(kind, &cfg, cfg.epsilon, seed).unwrap();
        let rec = interact_tableau(&tab, &mut p).unwrap();

        prop_assert_eq!(rec.arm_counts().iter().sum::<u64>(), horizon as u64);
        for (t, (&a, &y)) in rec.history().choices().iter().zip(rec.observed_rewards()).enumerate() {
            prop_assert_eq!(y, tab.reward(t, a));
        }
        for ((m, &n), &s) in rec.sample_means().iter().zip(rec.arm_counts()).zip(rec.arm_sums()) {
            match m {
                Some(m) => prop_assert!((m * n as f64 - s).abs() <= 1e-9),
                None => prop_assert_eq!(n, 0),
            }
        }

        let regret = pseudo_regret_stochastic(&rec, &model).unwrap();
        let spread = means.iter().cloned().fold(f64::MIN, f64::max)
            - means.iter().cloned().fold(f64::MAX, f64::min);
        prop_assert!(regret >= -1e-9);
        prop_assert!(regret <= horizon as f64 * spread + 1e-9);
    }

    #[test]
    fn online_and_tableau_agree(
        means in prop::collection::vec(0.0f64..=1.0, 2..5),
        horizon in 1usize..80,
        kind in prop::sample::select(STOCHASTIC.to_vec()),
        seed in any::<u64>(),
    ) {
        let cfg = ExperimentConfig { arms: means.len(), horizon, epsilon: 2.0, ..ExperimentConfig::default() };
        let model = RewardModel::BernoulliArms { means };
        let mut p = make_policy(kind, &cfg, cfg.epsilon, seed).unwrap();
        let a = interact_online(&model, horizon, &mut p, seed).unwrap();
        let mut p = make_policy(kind, &cfg, cfg.epsilon, seed).unwrap();
        let b = interact_tableau(&generate_tableau(&model, horizon, seed).unwrap(), &mut p).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn contextual_runs_agree_and_conserve(
        arms in 1usize..4,
        dim in 1usize..4,
        horizon in 1usize..60,
        private in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let cfg = ExperimentConfig { arms, dim, horizon, epsilon: 1.0, ..ExperimentConfig::default() };
        let kind = if private { PolicyKind::LinPriv } else { PolicyKind::Oful };
        let model = pvalue_model(&cfg, seed);
        let mut p = make_policy(kind, &cfg, cfg.epsilon, seed).unwrap();
        let a = interact_online(&model, horizon, &mut p, seed).unwrap();
        let mut p = make_policy(kind, &cfg, cfg.epsilon, seed).unwrap();
        let b = interact_tableau(&generate_tableau(&model, horizon, seed).unwrap(), &mut p).unwrap();
        prop_assert_eq!(a.arm_counts().iter().sum::<u64>(), horizon as u64);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn release_is_exact_sum_plus_decomposition_noise(
        ys in prop::collection::vec(0.0f64..=1.0, 1..200),
        eps in 0.05f64..5.0,
        seed in any::<u64>(),
    ) {
        let mut c = TreeCounter::new(eps, seed).unwrap();
        c.enable_audit();
        for &y in &ys {
            c.add(y).unwrap();
        }
        let release = c.release().unwrap();
        let t = ys.len() as u64;
        let nodes = decomposition(t);
        let mut noise = 0.0;
        for n in &nodes {
            let rec = c
                .noise_ledger()
                .iter()
                .find(|r| r.start == n.start && r.end == n.end)
                .expect("every node of the release has drawn noise");
            prop_assert!((rec.scale - n.levels() as f64 / eps).abs() <= 1e-12 * rec.scale);
            noise += rec.noise[0];
        }
        let exact: f64 = ys.iter().sum();
        prop_assert!((c.exact_sum() - exact).abs() <= 1e-9);
        prop_assert!((release - exact - noise).abs() <= 1e-7 * (1.0 + noise.abs()));
        prop_assert_eq!(c.release().unwrap(), release);
    }

    #[test]
    fn noise_bound_scales_and_orders(
        t in 1u64..100_000,
        eps in 0.01f64..10.0,
        d1 in 0.001f64..0.5,
        d2 in 0.001f64..0.5,
    ) {
        let b = noise_bound(t, eps, d1).unwrap();
        prop_assert!(b > 0.0);
        let half = noise_bound(t, 2.0 * eps, d1).unwrap();
        prop_assert!((half - b / 2.0).abs() <= 1e-9 * b);
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(noise_bound(t, eps, lo).unwrap() >= noise_bound(t, eps, hi).unwrap());
    }

    #[test]
    fn private_radius_is_non_increasing_in_epsilon(
        xs in prop::collection::vec(unit_vec(2), 1..20),
        e1 in 0.01f64..10.0,
        e2 in 0.01f64..10.0,
    ) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let radius = |eps: f64| {
            let mut st = ArmRegressionState::private(2, 1.0, eps, 0, 16).unwrap();
            xs.iter().for_each(|x| st.update(x, 0.5).unwrap());
            st.noise_radius(0.05).unwrap()
        };
        prop_assert!(radius(lo) >= radius(hi));
    }

    #[test]
    fn gram_eigenvalues_stay_above_lambda(
        lambda in 1.0f64..4.0,
        xs in prop::collection::vec(unit_vec(3), 1..30),
        ys in prop::collection::vec(0.0f64..=1.0, 30),
    ) {
        let mut st = ArmRegressionState::new(3, lambda).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            st.update(x, y).unwrap();
            let eig = SymmetricEigen::new(st.gram().clone());
            prop_assert!(eig.eigenvalues.min() >= lambda - 1e-9);
        }
    }

    #[test]
    fn gram_and_widths_do_not_read_rewards(
        xs in prop::collection::vec(unit_vec(2), 1..25),
        ya in prop::collection::vec(0.0f64..=1.0, 25),
        yb in prop::collection::vec(0.0f64..=1.0, 25),
        probe in unit_vec(2),
        seed in any::<u64>(),
    ) {
        let mut a = ArmRegressionState::private(2, 1.0, 0.5, seed, 16).unwrap();
        let mut b = ArmRegressionState::private(2, 1.0, 0.5, seed, 16).unwrap();
        for (x, (&y1, &y2)) in xs.iter().zip(ya.iter().zip(&yb)) {
            a.update(x, y1).unwrap();
            b.update(x, y2).unwrap();
        }
        prop_assert_eq!(a.gram(), b.gram());
        prop_assert_eq!(a.confidence_width(&probe, 30, 0.05), b.confidence_width(&probe, 30, 0.05));
        prop_assert_eq!(a.inverse_norm(&probe), b.inverse_norm(&probe));
        prop_assert_eq!(a.noise_radius(0.05).unwrap(), b.noise_radius(0.05).unwrap());
    }

    #[test]
    fn noiseless_private_policies_match_their_base(
        means in prop::collection::vec(0.0f64..=1.0, 2..5),
        horizon in 2usize..100,
        seed in any::<u64>(),
    ) {
        let model = RewardModel::BernoulliArms { means: means.clone() };
        let tab = generate_tableau(&model, horizon, seed).unwrap();
        let delta = 1.0 / horizon as f64;
        let a = interact_tableau(&tab, &mut Ucb::new(means.len(), delta).unwrap()).unwrap();
        let b = interact_tableau(
            &tab,
            &mut PrivUcb::new(means.len(), horizon, f64::INFINITY, delta, seed).unwrap(),
        ).unwrap();
        prop_assert_eq!(a.history(), b.history());

        // Rewards in [0, 1], so the private policy's clipping is a no-op.
        let cfg = ExperimentConfig { arms: 3, dim: 3, horizon, clamp: true, ..ExperimentConfig::default() };
        let lin = pvalue_model(&cfg, seed);
        let tab = generate_tableau(&lin, horizon, seed).unwrap();
        let base = LinUcbConfig { arms: 3, dim: 3, horizon, lambda: 1.0, delta, epsilon: None };
        let oful = interact_tableau(&tab, &mut LinUcb::new(base.clone(), seed).unwrap()).unwrap();
        let priv_inf = interact_tableau(
            &tab,
            &mut LinUcb::new(LinUcbConfig { epsilon: Some(f64::INFINITY), ..base }, seed).unwrap(),
        ).unwrap();
        prop_assert_eq!(oful.history(), priv_inf.history());
    }

    #[test]
    fn laplace_quantile_inverts_the_cdf(u in 0.001f64..0.999, b in 0.01f64..10.0) {
        let x = laplace_inv_cdf(u, b).unwrap();
        let cdf = if x < 0.0 { 0.5 * (x / b).exp() } else { 1.0 - 0.5 * (-x / b).exp() };
        prop_assert!((cdf - u).abs() <= 1e-9);
    }

    #[test]
    fn correction_never_exceeds_alpha(
        alpha in 0.0f64..=1.0,
        beta in 0.001f64..0.999,
        eps in 0.0f64..3.0,
        t in 1u64..10_000,
    ) {
        let k = max_info_bound(eps, t, beta).unwrap();
        prop_assert!(k >= 0.0);
        prop_assert!(max_info_bound(eps + 0.1, t, beta).unwrap() > k);
        prop_assert!(max_info_bound(eps + 0.1, t + 1, beta).unwrap() > max_info_bound(eps + 0.1, t, beta).unwrap());
        let g = pvalue_correction(alpha, beta, k);
        prop_assert!((0.0..=alpha).contains(&g));
    }

    #[test]
    fn bias_report_is_internally_consistent(
        means in prop::collection::vec(0.0f64..=1.0, 1..5),
        rows in prop::collection::vec(prop::collection::vec(prop::option::of(0.0f64..=1.0), 5), 2..40),
    ) {
        let mut acc = BiasAccumulator::new(&means);
        for r in &rows {
            acc.push(&r[..means.len()]);
        }
        let rep = acc.report();
        let present: Vec<_> = rep.present().collect();
        for a in present.iter().filter(|a| a.n_reps >= 2) {
            prop_assert!((a.ci_lo - (a.bias - 1.96 * a.se)).abs() <= 1e-12);
            prop_assert!((a.ci_hi - (a.bias + 1.96 * a.se)).abs() <= 1e-12);
        }
        if !present.is_empty() {
            let agg = present.iter().map(|a| a.bias.abs()).sum::<f64>() / present.len() as f64;
            prop_assert!((rep.aggregate - agg).abs() <= 1e-12);
        }
    }
}
