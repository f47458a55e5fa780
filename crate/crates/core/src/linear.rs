//! Linear contextual bandits: OFUL (ridge UCB) and its reward-private
//! variant, plus a Monte Carlo estimator of the prediction bias of least
//! squares fitted to adaptively gathered data.
//!
//! The private variant keeps, per arm, a [`VectorTreeCounter`] over the items
//! `x_s * y_s` and solves the ridge system against its noisy release. The Gram
//! matrix and the confidence widths depend only on contexts and the action
//! history, so the selections are post-processing of the counter releases.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{generate_tableau, ContextGenerator, RewardModel, RoundContexts};
use crate::policy::{argmax, Policy, RoundRobin};
use crate::privacy::{vector_noise_bound, VectorTreeCounter};
use crate::stats::MeanSe;

const COUNTER_STREAM_BASE: u64 = 16;

/// Parameters shared by [`LinUcb`] in its plain and private forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinUcbConfig {
    pub arms: usize,
    pub dim: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub delta: f64,
    /// Reward-privacy budget; `None` is plain OFUL.
    pub epsilon: Option<f64>,
}

impl LinUcbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.arms == 0 || self.dim == 0 || self.horizon == 0 {
            return Err(Error::invalid("arms, dim and horizon must be positive"));
        }
        if !(self.lambda >= 1.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda {} must be finite and >= 1",
                self.lambda
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta {} must lie in (0, 1)",
                self.delta
            )));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(Error::invalid(format!("epsilon {eps} must be positive")));
            }
        }
        Ok(())
    }
}

/// Ridge accumulators for one arm.
#[derive(Debug, Clone)]
pub struct ArmRegressionState {
    lambda: f64,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    private_xty: Option<VectorTreeCounter>,
    noisy_xty: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    count: u64,
}

impl ArmRegressionState {
    /// A non-private state.
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        Self::build(dim, lambda, None)
    }

    /// A state whose `X'Y` is also released through a vector counter with
    /// L1 sensitivity `sqrt(d)` and budget `eps`.
    pub fn private(dim: usize, lambda: f64, eps: f64, seed: u64, stream: u64) -> Result<Self> {
        let counter = VectorTreeCounter::with_stream(dim, (dim as f64).sqrt(), eps, seed, stream)?;
        Self::build(dim, lambda, Some(counter))
    }

    fn build(dim: usize, lambda: f64, private_xty: Option<VectorTreeCounter>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda {lambda} must be positive")));
        }
        let gram = DMatrix::identity(dim, dim) * lambda;
        let chol = Cholesky::new(gram.clone()).expect("scaled identity is SPD");
        Ok(ArmRegressionState {
            lambda,
            gram,
            xty: DVector::zeros(dim),
            private_xty,
            noisy_xty: DVector::zeros(dim),
            chol,
            count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.xty.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `X'X + λI`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Exact `X'Y`.
    pub fn xty(&self) -> &DVector<f64> {
        &self.xty
    }

    pub fn is_private(&self) -> bool {
        self.private_xty.is_some()
    }

    /// Adds one observation. The private counter receives `x * clip(y)`,
    /// with `y` clipped to `[0, 1]` so the declared sensitivity holds for
    /// unclamped reward models too.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let xv = DVector::from_column_slice(x);
        self.gram.ger(1.0, &xv, &xv, 1.0);
        self.xty.axpy(y, &xv, 1.0);
        if let Some(counter) = self.private_xty.as_mut() {
            let yc = y.clamp(0.0, 1.0);
            let item: Vec<f64> = x.iter().map(|v| v * yc).collect();
            counter.add(&item)?;
            self.noisy_xty = DVector::from_vec(counter.release()?);
        }
        self.count += 1;
        self.chol = Cholesky::new(self.gram.clone()).ok_or_else(|| {
            Error::Invariant("ridge Gram matrix lost positive definiteness".into())
        })?;
        Ok(())
    }

    /// `V^{-1} X'Y` through the Cholesky factor.
    pub fn ridge_estimate(&self) -> DVector<f64> {
        self.chol.solve(&self.xty)
    }

    /// `V^{-1} (X'Y + η)` with the counter's noisy release; equal to
    /// [`ridge_estimate`](Self::ridge_estimate) for non-private states.
    pub fn private_estimate(&self) -> DVector<f64> {
        if self.private_xty.is_some() {
            self.chol.solve(&self.noisy_xty)
        } else {
            self.ridge_estimate()
        }
    }

    /// `V^{-1} (X'Y + eta)` for a caller-supplied noise vector.
    pub fn estimate_with_noise(&self, eta: &[f64]) -> Result<DVector<f64>> {
        if eta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: eta.len(),
            });
        }
        Ok(self
            .chol
            .solve(&(&self.xty + DVector::from_column_slice(eta))))
    }

    /// `sqrt(x' V^{-1} x)`.
    pub fn inverse_norm(&self, x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        xv.dot(&self.chol.solve(&xv)).max(0.0).sqrt()
    }

    /// `||x||_{V^{-1}} (sqrt(2 d ln((1 + t/λ)/δ)) + sqrt(λ))`.
    pub fn confidence_width(&self, x: &[f64], t: usize, delta: f64) -> f64 {
        self.inverse_norm(x) * width_factor(self.dim(), self.lambda, t, delta)
    }

    /// High-probability bound on `||η||_2` for the current release.
    pub fn noise_radius(&self, delta_fail: f64) -> Result<f64> {
        match &self.private_xty {
            Some(c) if self.count > 0 => {
                vector_noise_bound(self.count, c.epsilon(), c.l1_bound(), c.dim(), delta_fail)
            }
            _ => Ok(0.0),
        }
    }
}

fn width_factor(dim: usize, lambda: f64, t: usize, delta: f64) -> f64 {
    let log = ((1.0 + t as f64 / lambda) / delta).ln().max(0.0);
    (2.0 * dim as f64 * log).sqrt() + lambda.sqrt()
}

/// OFUL when `epsilon` is `None`, reward-private linear UCB otherwise.
///
/// The private index of arm `i` with context `x` is
///
/// ```text
/// <θ_priv, x> + ||x||_{V^{-1}} s / sqrt(λ) + w
/// ```
///
/// where `w` is the OFUL width and `s` bounds `||η||_2`, so the middle term
/// bounds `|<V^{-1} η, x>|` through `||η||_{V^{-1}} <= ||η||_2 / sqrt(λ)`.
/// Unpulled arms get `+inf`.
#[derive(Debug, Clone)]
pub struct LinUcb {
    cfg: LinUcbConfig,
    states: Vec<ArmRegressionState>,
    estimates: Vec<DVector<f64>>,
    radii: Vec<f64>,
}

impl LinUcb {
    pub fn new(cfg: LinUcbConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let states = (0..cfg.arms)
            .map(|i| match cfg.epsilon {
                None => ArmRegressionState::new(cfg.dim, cfg.lambda),
                Some(eps) => ArmRegressionState::private(
                    cfg.dim,
                    cfg.lambda,
                    eps,
                    seed,
                    COUNTER_STREAM_BASE + i as u64,
                ),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LinUcb {
            estimates: vec![DVector::zeros(cfg.dim); cfg.arms],
            radii: vec![0.0; cfg.arms],
            cfg,
            states,
        })
    }

    pub fn oful(arms: usize, dim: usize, horizon: usize, lambda: f64, delta: f64) -> Result<Self> {
        Self::new(
            LinUcbConfig {
                arms,
                dim,
                horizon,
                lambda,
                delta,
                epsilon: None,
            },
            0,
        )
    }

    pub fn config(&self) -> &LinUcbConfig {
        &self.cfg
    }

    pub fn state(&self, arm: usize) -> &ArmRegressionState {
        &self.states[arm]
    }

    /// Index of `arm` for context `x` at round `t`.
    pub fn index(&self, arm: usize, x: &[f64], t: usize) -> f64 {
        let st = &self.states[arm];
        if st.count() == 0 {
            return f64::INFINITY;
        }
        let xv = DVector::from_column_slice(x);
        let norm = st.inverse_norm(x);
        let wf = width_factor(self.cfg.dim, self.cfg.lambda, t, self.cfg.delta);
        self.estimates[arm].dot(&xv) + norm * (self.radii[arm] / self.cfg.lambda.sqrt() + wf)
    }
}

impl Policy for LinUcb {
    fn arms(&self) -> usize {
        self.cfg.arms
    }

    fn select(&mut self, round: usize, contexts: Option<RoundContexts<'_>>) -> Result<usize> {
        let ctx = contexts.ok_or(Error::MissingContexts)?;
        if ctx.dim() != self.cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.dim,
                got: ctx.dim(),
            });
        }
        if ctx.arms() != self.cfg.arms {
            return Err(Error::invalid(format!(
                "round has {} contexts for {} arms",
                ctx.arms(),
                self.cfg.arms
            )));
        }
        Ok(argmax(
            (0..self.cfg.arms).map(|i| self.index(i, ctx.arm(i), round)),
        ))
    }

    fn observe(&mut self, arm: usize, context: Option<&[f64]>, reward: f64) -> Result<()> {
        let x = context.ok_or(Error::MissingContexts)?;
        let st = &mut self.states[arm];
        st.update(x, reward)?;
        self.estimates[arm] = st.private_estimate();
        self.radii[arm] = st.noise_radius(self.cfg.delta / self.cfg.arms as f64)?;
        Ok(())
    }
}

/// How data is gathered for [`prediction_bias`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GatherPolicy {
    RoundRobin,
    Oful,
    LinPriv { epsilon: f64 },
}

/// Mean prediction error `(θ̂ - θ) . x` at one context, over replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextBias {
    pub context: Vec<f64>,
    pub ridge_mean: f64,
    pub ridge_se: f64,
    /// Absent when no replication had a full-rank design for this arm.
    pub ols_mean: Option<f64>,
    pub ols_se: Option<f64>,
}

/// The worst context: signed mean error there and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxBias {
    pub context: usize,
    pub bias: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionBias {
    pub arm: usize,
    pub reps: usize,
    /// Replications in which the arm was pulled at least once.
    pub ridge_reps: usize,
    /// Replications in which the arm's design had full column rank.
    pub ols_reps: usize,
    pub contexts: Vec<ContextBias>,
    pub ridge_max: MaxBias,
    pub ols_max: Option<MaxBias>,
}

/// Monte Carlo estimate of the prediction bias of the least-squares fit to
/// arm `arm`'s gathered data.
///
/// `model` must be linear-gaussian with a fixed context list; the bias is
/// evaluated on the distinct contexts that list assigns to `arm`.
/// Replication `r` uses seed `base_seed + r` for both the tableau and the
/// gathering policy. Both the ridge fit (with the gathering `λ`) and, when
/// the design has full rank, ordinary least squares are reported.
pub fn prediction_bias(
    model: &RewardModel,
    cfg: &LinUcbConfig,
    policy: GatherPolicy,
    arm: usize,
    reps: usize,
    base_seed: u64,
) -> Result<PredictionBias> {
    model.validate()?;
    let RewardModel::LinearGaussian {
        thetas,
        contexts: ContextGenerator::Fixed(rows),
        ..
    } = model
    else {
        return Err(Error::invalid(
            "prediction bias needs a linear model with a fixed context list",
        ));
    };
    if arm >= thetas.len() || cfg.arms != thetas.len() || cfg.dim != model.dim().unwrap_or(0) {
        return Err(Error::invalid(
            "arm, arm count or dimension disagree with the model",
        ));
    }
    if reps == 0 {
        return Err(Error::invalid("reps must be positive"));
    }
    cfg.validate()?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        if !points.contains(&row[arm]) {
            points.push(row[arm].clone());
        }
    }
    let theta = DVector::from_column_slice(&thetas[arm]);

    let per_rep: Vec<(Option<Vec<f64>>, Option<Vec<f64>>)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let seed = base_seed.wrapping_add(r);
            let tab = generate_tableau(model, cfg.horizon, seed)?;
            let mut gatherer: Box<dyn Policy> = match policy {
                GatherPolicy::RoundRobin => Box::new(RoundRobin::new(cfg.arms)?),
                GatherPolicy::Oful => Box::new(LinUcb::new(
                    LinUcbConfig {
                        epsilon: None,
                        ..cfg.clone()
                    },
                    seed,
                )?),
                GatherPolicy::LinPriv { epsilon } => Box::new(LinUcb::new(
                    LinUcbConfig {
                        epsilon: Some(epsilon),
                        ..cfg.clone()
                    },
                    seed,
                )?),
            };
            let record = crate::interact::interact_tableau(&tab, &mut gatherer)?;
            let mut xtx = DMatrix::<f64>::zeros(cfg.dim, cfg.dim);
            let mut xty = DVector::<f64>::zeros(cfg.dim);
            let mut n = 0usize;
            for (t, (&a, &y)) in record
                .history()
                .choices()
                .iter()
                .zip(record.observed_rewards())
                .enumerate()
            {
                if a != arm {
                    continue;
                }
                let x = DVector::from_column_slice(
                    tab.round_contexts(t)
                        .expect("linear tableau has contexts")
                        .arm(arm),
                );
                xtx.ger(1.0, &x, &x, 1.0);
                xty.axpy(y, &x, 1.0);
                n += 1;
            }
            if n == 0 {
                return Ok((None, None));
            }
            let errors = |est: &DVector<f64>| -> Vec<f64> {
                let diff = est - &theta;
                points
                    .iter()
                    .map(|p| diff.dot(&DVector::from_column_slice(p)))
                    .collect()
            };
            let ridge_gram = &xtx + DMatrix::identity(cfg.dim, cfg.dim) * cfg.lambda;
            let ridge = Cholesky::new(ridge_gram)
                .ok_or_else(|| Error::Invariant("ridge Gram matrix is not SPD".into()))?
                .solve(&xty);
            let ols = ols_solve(&xtx, &xty).map(|est| errors(&est));
            Ok((Some(errors(&ridge)), ols))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ridge_acc = vec![MeanSe::new(); points.len()];
    let mut ols_acc = vec![MeanSe::new(); points.len()];
    let (mut ridge_reps, mut ols_reps) = (0, 0);
    for (ridge, ols) in &per_rep {
        if let Some(e) = ridge {
            ridge_reps += 1;
            ridge_acc.iter_mut().zip(e).for_each(|(a, &v)| a.push(v));
        }
        if let Some(e) = ols {
            ols_reps += 1;
            ols_acc.iter_mut().zip(e).for_each(|(a, &v)| a.push(v));
        }
    }
    let contexts: Vec<ContextBias> = points
        .iter()
        .zip(ridge_acc.iter().zip(&ols_acc))
        .map(|(p, (r, o))| ContextBias {
            context: p.clone(),
            ridge_mean: r.mean(),
            ridge_se: r.se(),
            ols_mean: (o.count() > 0).then(|| o.mean()),
            ols_se: (o.count() > 0).then(|| o.se()),
        })
        .collect();
    let worst = |vals: &[(f64, f64)]| {
        let c = argmax(vals.iter().map(|v| v.0.abs()));
        MaxBias {
            context: c,
            bias: vals[c].0,
            se: vals[c].1,
        }
    };
    let ridge_vals: Vec<(f64, f64)> = contexts
        .iter()
        .map(|c| (c.ridge_mean, c.ridge_se))
        .collect();
    let ols_max = (ols_reps > 0).then(|| {
        let v: Vec<(f64, f64)> = contexts
            .iter()
            .map(|c| (c.ols_mean.unwrap_or(0.0), c.ols_se.unwrap_or(0.0)))
            .collect();
        worst(&v)
    });
    Ok(PredictionBias {
        arm,
        reps,
        ridge_reps,
        ols_reps,
        ridge_max: worst(&ridge_vals),
        ols_max,
        contexts,
    })
}

/// Ordinary least squares from `X'X` and `X'Y`; `None` when `X'X` is
/// numerically singular.
pub(crate) fn ols_solve(xtx: &DMatrix<f64>, xty: &DVector<f64>) -> Option<DVector<f64>> {
    let eig = SymmetricEigen::new(xtx.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(max > 0.0) || min <= 1e-10 * max {
        return None;
    }
    Cholesky::new(xtx.clone()).map(|c| c.solve(xty))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_state_estimates_zero() {
        let st = ArmRegressionState::new(3, 1.0).unwrap();
        assert_eq!(st.ridge_estimate(), DVector::zeros(3));
    }

    #[test]
    fn single_observation_hand_solve() {
        let mut st = ArmRegressionState::new(2, 1.0).unwrap();
        st.update(&[1.0, 0.0], 1.0).unwrap();
        let th = st.ridge_estimate();
        assert!((th[0] - 0.5).abs() < 1e-12 && th[1].abs() < 1e-12);
    }

    #[test]
    fn scalar_noise_injection() {
        let st = ArmRegressionState::new(1, 1.0).unwrap();
        assert!((st.estimate_with_noise(&[0.5]).unwrap()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn width_without_data() {
        let st = ArmRegressionState::new(3, 1.0).unwrap();
        let x = [0.6, 0.8, 0.0];
        let (t, delta): (usize, f64) = (10, 0.05);
        let expect = (2.0 * 3.0 * ((1.0 + 10.0) / delta).ln()).sqrt() + 1.0;
        assert!((st.confidence_width(&x, t, delta) - expect).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut st = ArmRegressionState::new(2, 1.0).unwrap();
        assert!(matches!(
            st.update(&[1.0], 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut p = LinUcb::oful(2, 2, 10, 1.0, 0.1).unwrap();
        let ctx = [1.0, 0.0, 0.0];
        assert!(p.select(1, Some(RoundContexts::new(3, &ctx))).is_err());
        assert!(matches!(p.select(1, None), Err(Error::MissingContexts)));
    }

    #[test]
    fn config_rejects_small_lambda() {
        assert!(LinUcb::oful(2, 2, 10, 0.5, 0.1).is_err());
        assert!(LinUcb::oful(2, 2, 10, 1.0, 1.5).is_err());
    }

    #[test]
    fn ols_detects_rank_deficiency() {
        let xtx = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(ols_solve(&xtx, &DVector::zeros(2)).is_none());
    }
}
