use rand::distr::{Distribution, Open01};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// One drawn node noise, kept when auditing is enabled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRecord {
    pub epoch: u32,
    pub level: u32,
    pub start: u64,
    pub end: u64,
    pub scale: f64,
    pub noise: Vec<f64>,
}

/// Shared state of the scalar and vector counters.
///
/// Only node noises are stored: the release is the exact running sum plus the
/// noises of the nodes in the current decomposition, which equals the sum of
/// the noisy node sums. Within the current epoch, the node for level `l` is
/// live exactly when bit `l` of the epoch position is set.
#[derive(Debug, Clone)]
struct TreeCore {
    eps: f64,
    sensitivity: f64,
    dim: usize,
    rng: ChaCha8Rng,
    t: u64,
    epoch: u32,
    pos: u64,
    exact: Vec<f64>,
    level_noise: Vec<f64>,
    level_drawn: Vec<bool>,
    roots: Vec<f64>,
    roots_drawn: Vec<bool>,
    cache: Option<Vec<f64>>,
    audit: Option<Vec<NoiseRecord>>,
}

impl TreeCore {
    fn new(dim: usize, sensitivity: f64, eps: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::invalid(format!("epsilon {eps} must be positive")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(TreeCore {
            eps,
            sensitivity,
            dim,
            rng,
            t: 0,
            epoch: 0,
            pos: 0,
            exact: vec![0.0; dim],
            level_noise: vec![0.0; dim],
            level_drawn: vec![false],
            roots: Vec::new(),
            roots_drawn: Vec::new(),
            cache: None,
            audit: None,
        })
    }

    /// Laplace scale of every node in epoch `e`.
    fn scale(&self, epoch: u32) -> f64 {
        (epoch + 1) as f64 * self.sensitivity / self.eps
    }

    fn push(&mut self, item: &[f64]) {
        self.t += 1;
        self.pos += 1;
        for (s, v) in self.exact.iter_mut().zip(item) {
            *s += v;
        }
        // The node completed by this item replaces every lower level.
        let top = self.pos.trailing_zeros() as usize;
        for l in 0..=top {
            self.level_drawn[l] = false;
        }
        if self.pos == 1 << self.epoch {
            let e = self.epoch as usize;
            self.roots
                .extend_from_slice(&self.level_noise[e * self.dim..(e + 1) * self.dim]);
            self.roots_drawn.push(self.level_drawn[e]);
            self.epoch += 1;
            self.pos = 0;
            let levels = self.epoch as usize + 1;
            self.level_noise = vec![0.0; levels * self.dim];
            self.level_drawn = vec![false; levels];
        }
        self.cache = None;
    }

    fn draw(&mut self, epoch: u32, level: u32, start: u64, out: &mut [f64]) {
        let scale = self.scale(epoch);
        for v in out.iter_mut() {
            *v = if scale == 0.0 {
                0.0
            } else {
                let u: f64 = Open01.sample(&mut self.rng);
                let c = u - 0.5;
                -scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
            };
        }
        if let Some(audit) = self.audit.as_mut() {
            audit.push(NoiseRecord {
                epoch,
                level,
                start,
                end: start + (1u64 << level) - 1,
                scale,
                noise: out.to_vec(),
            });
        }
    }

    fn release(&mut self) -> Result<&[f64]> {
        if self.t == 0 {
            return Err(Error::EmptyCounter);
        }
        if self.cache.is_none() {
            let dim = self.dim;
            let mut total = self.exact.clone();
            let mut buf = vec![0.0; dim];
            for e in 0..self.roots_drawn.len() {
                if !self.roots_drawn[e] {
                    self.draw(e as u32, e as u32, 1 << e, &mut buf);
                    self.roots[e * dim..(e + 1) * dim].copy_from_slice(&buf);
                    self.roots_drawn[e] = true;
                }
                for (s, n) in total.iter_mut().zip(&self.roots[e * dim..(e + 1) * dim]) {
                    *s += n;
                }
            }
            let base = 1u64 << self.epoch;
            for l in (0..=self.epoch as usize).rev() {
                if self.pos & (1 << l) == 0 {
                    continue;
                }
                if !self.level_drawn[l] {
                    let local_start = ((self.pos >> (l + 1)) << (l + 1)) + 1;
                    self.draw(self.epoch, l as u32, base + local_start - 1, &mut buf);
                    self.level_noise[l * dim..(l + 1) * dim].copy_from_slice(&buf);
                    self.level_drawn[l] = true;
                }
                for (s, n) in total
                    .iter_mut()
                    .zip(&self.level_noise[l * dim..(l + 1) * dim])
                {
                    *s += n;
                }
            }
            self.cache = Some(total);
        }
        Ok(self.cache.as_deref().expect("filled above"))
    }
}

/// ε-DP continual release of a running sum of items in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct TreeCounter {
    core: TreeCore,
}

impl TreeCounter {
    /// A counter whose noise is drawn from ChaCha stream 0 of `seed`.
    /// `eps = f64::INFINITY` disables noise.
    pub fn new(eps: f64, seed: u64) -> Result<Self> {
        Self::with_stream(eps, seed, 0)
    }

    pub fn with_stream(eps: f64, seed: u64, stream: u64) -> Result<Self> {
        Ok(TreeCounter {
            core: TreeCore::new(1, 1.0, eps, seed, stream)?,
        })
    }

    /// Noise-free counter, for tests of the exact-sum path.
    pub fn without_noise() -> Self {
        Self::new(f64::INFINITY, 0).expect("infinite epsilon is valid")
    }

    /// Records every node noise as it is drawn.
    pub fn enable_audit(&mut self) {
        self.core.audit.get_or_insert_with(Vec::new);
    }

    pub fn epsilon(&self) -> f64 {
        self.core.eps
    }

    /// Number of items inserted.
    pub fn len(&self) -> u64 {
        self.core.t
    }

    pub fn is_empty(&self) -> bool {
        self.core.t == 0
    }

    pub fn add(&mut self, y: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::SensitivityViolation {
                magnitude: y,
                bound: 1.0,
            });
        }
        self.core.push(&[y]);
        Ok(())
    }

    /// Noisy prefix sum of everything inserted so far. Repeated calls without
    /// an intervening [`add`](Self::add) return the same value.
    pub fn release(&mut self) -> Result<f64> {
        Ok(self.core.release()?[0])
    }

    /// The un-noised running sum. Not private; for tests and audits.
    pub fn exact_sum(&self) -> f64 {
        self.core.exact[0]
    }

    /// Radius `r` with `P(|release - exact| > r) <= delta_fail` at the
    /// current length.
    pub fn noise_bound(&self, delta_fail: f64) -> Result<f64> {
        super::noise_bound(self.core.t, self.core.eps, delta_fail)
    }

    pub fn noise_ledger(&self) -> &[NoiseRecord] {
        self.core.audit.as_deref().unwrap_or_default()
    }

    pub fn noise_ledger_json(&self) -> String {
        serde_json::to_string_pretty(self.noise_ledger()).expect("plain data serializes")
    }
}

/// ε-DP continual release of a running sum of vectors with
/// `||v||_1 <= l1_bound`. Every coordinate of every node gets independent
/// Laplace noise at scale `l1_bound * levels / ε`.
#[derive(Debug, Clone)]
pub struct VectorTreeCounter {
    core: TreeCore,
}

impl VectorTreeCounter {
    pub fn new(dim: usize, l1_bound: f64, eps: f64, seed: u64) -> Result<Self> {
        Self::with_stream(dim, l1_bound, eps, seed, 0)
    }

    pub fn with_stream(
        dim: usize,
        l1_bound: f64,
        eps: f64,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("vector counter needs dim >= 1"));
        }
        if !(l1_bound > 0.0 && l1_bound.is_finite()) {
            return Err(Error::invalid(format!(
                "L1 bound {l1_bound} must be positive"
            )));
        }
        Ok(VectorTreeCounter {
            core: TreeCore::new(dim, l1_bound, eps, seed, stream)?,
        })
    }

    pub fn enable_audit(&mut self) {
        self.core.audit.get_or_insert_with(Vec::new);
    }

    pub fn dim(&self) -> usize {
        self.core.dim
    }

    pub fn l1_bound(&self) -> f64 {
        self.core.sensitivity
    }

    pub fn epsilon(&self) -> f64 {
        self.core.eps
    }

    pub fn len(&self) -> u64 {
        self.core.t
    }

    pub fn is_empty(&self) -> bool {
        self.core.t == 0
    }

    pub fn add(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.core.dim {
            return Err(Error::DimensionMismatch {
                expected: self.core.dim,
                got: v.len(),
            });
        }
        let l1: f64 = v.iter().map(|x| x.abs()).sum();
        if !(l1 <= self.core.sensitivity * (1.0 + 1e-12)) {
            return Err(Error::SensitivityViolation {
                magnitude: l1,
                bound: self.core.sensitivity,
            });
        }
        self.core.push(v);
        Ok(())
    }

    pub fn release(&mut self) -> Result<Vec<f64>> {
        Ok(self.core.release()?.to_vec())
    }

    pub fn exact_sum(&self) -> &[f64] {
        &self.core.exact
    }

    /// Bound on the Euclidean norm of the release noise at the current
    /// length.
    pub fn noise_bound(&self, delta_fail: f64) -> Result<f64> {
        super::vector_noise_bound(
            self.core.t,
            self.core.eps,
            self.core.sensitivity,
            self.core.dim,
            delta_fail,
        )
    }

    pub fn noise_ledger(&self) -> &[NoiseRecord] {
        self.core.audit.as_deref().unwrap_or_default()
    }
}
