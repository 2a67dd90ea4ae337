//! Run configuration shared by the clustering pipelines.

use crate::error::{Error, Result};

/// Parameters controlling both pipelines. Defaults follow the reference
/// settings: 1000 representatives chosen from a 10x candidate pool, 5
/// nearest representatives with a 10x candidate neighborhood, ensembles of
/// 20 members with per-member cluster counts drawn from [20, 60].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Representative count (p).
    pub p: usize,
    /// Candidate count for hybrid selection (p'), normally 10 * p.
    pub p_prime: usize,
    /// Nearest-representative count (K).
    pub k_nearest: usize,
    /// Candidate neighborhood size around a representative (K'), normally 10 * K.
    pub k_prime: usize,
    /// Target cluster count for a single run.
    pub k: usize,
    /// Ensemble size (m).
    pub m: usize,
    /// Lower bound on per-member cluster counts.
    pub k_min: usize,
    /// Upper bound on per-member cluster counts.
    pub k_max: usize,
    /// Iteration cap for every k-means invocation.
    pub t_max: usize,
    /// Master RNG seed; every sub-stream derives from it.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: 1000,
            p_prime: 10_000,
            k_nearest: 5,
            k_prime: 50,
            k: 2,
            m: 20,
            k_min: 20,
            k_max: 60,
            t_max: 100,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Validates the raw invariants: K <= K' < p <= p', k >= 2,
    /// k_min <= k_max, m >= 1, t_max >= 1.
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("k must be >= 2, got {}", self.k)));
        }
        if self.m < 1 {
            return Err(Error::Config("ensemble size m must be >= 1".into()));
        }
        if self.t_max < 1 {
            return Err(Error::Config("t_max must be >= 1".into()));
        }
        if !(2..=self.k_max).contains(&self.k_min) {
            return Err(Error::Config(format!(
                "need 2 <= k_min <= k_max, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if self.k_nearest == 0 {
            return Err(Error::Config("K must be >= 1".into()));
        }
        if !(self.k_nearest <= self.k_prime && self.k_prime < self.p && self.p <= self.p_prime) {
            return Err(Error::Config(format!(
                "need K <= K' < p <= p', got K={}, K'={}, p={}, p'={}",
                self.k_nearest, self.k_prime, self.p, self.p_prime
            )));
        }
        Ok(())
    }

    /// Resolves the configuration against a dataset of `n` objects, clamping
    /// in order: p' to n, then p to p', then K' below p, then K into the
    /// candidate pool. Fails when the dataset cannot host k clusters.
    pub fn effective(&self, n: usize) -> Result<EffectiveConfig> {
        self.validate()?;
        if n < self.k {
            return Err(Error::Config(format!(
                "dataset has {n} objects but k={} clusters were requested",
                self.k
            )));
        }
        let p_prime = self.p_prime.min(n);
        if p_prime < self.p_prime {
            log::warn!(
                "clamping candidate count p' from {} to dataset size {}",
                self.p_prime,
                n
            );
        }
        let p = self.p.min(p_prime);
        let k_prime = self.k_prime.min(p.saturating_sub(1));
        let k_nearest = self.k_nearest.min(k_prime + 1).min(p);
        Ok(EffectiveConfig {
            p,
            p_prime,
            k_nearest,
            k_prime,
        })
    }
}

/// Configuration after clamping against a concrete dataset size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffectiveConfig {
    pub p: usize,
    pub p_prime: usize,
    pub k_nearest: usize,
    pub k_prime: usize,
}
