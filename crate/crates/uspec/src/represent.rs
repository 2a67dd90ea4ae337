//! Representative (landmark) selection strategies.
//!
//! Random selection is cheap but noisy; k-means selection is stable but its
//! cost scales with the dataset; hybrid selection refines a random candidate
//! pool with k-means so its clustering stage depends only on the pool size.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, KMeansOptions};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Random,
    Kmeans,
    Hybrid,
}

impl std::str::FromStr for Selection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Selection::Random),
            "kmeans" => Ok(Selection::Kmeans),
            "hybrid" => Ok(Selection::Hybrid),
            other => Err(Error::Value(format!("unknown selection strategy '{other}'"))),
        }
    }
}

/// A set of p representatives in the data space, with the strategy and seed
/// that produced it.
#[derive(Debug, Clone)]
pub struct RepresentativeSet {
    pub reps: Dataset,
    pub strategy: Selection,
    pub seed: u64,
}

impl RepresentativeSet {
    pub fn p(&self) -> usize {
        self.reps.n()
    }

    pub fn dim(&self) -> usize {
        self.reps.dim()
    }
}

/// Uniformly samples p distinct object rows.
pub fn select_random(data: &Dataset, p: usize, seed: u64) -> Result<RepresentativeSet> {
    if p == 0 || p > data.n() {
        return Err(Error::Value(format!(
            "need 1 <= p <= n, got p={p}, n={}",
            data.n()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let rows = sample_rows(data.n(), p, &mut rng);
    Ok(RepresentativeSet {
        reps: data.gather(&rows)?,
        strategy: Selection::Random,
        seed,
    })
}

/// Clusters the entire dataset into p groups and uses the centers as
/// representatives. Implemented as hybrid selection with the candidate pool
/// equal to the whole dataset, so the two strategies share one seed path.
pub fn select_kmeans(data: &Dataset, p: usize, seed: u64) -> Result<RepresentativeSet> {
    select_kmeans_with(data, p, &KMeansOptions::default(), seed)
}

pub fn select_kmeans_with(
    data: &Dataset,
    p: usize,
    opts: &KMeansOptions,
    seed: u64,
) -> Result<RepresentativeSet> {
    let mut set = hybrid_impl(data, p, data.n(), opts, seed)?;
    set.strategy = Selection::Kmeans;
    Ok(set)
}

/// Hybrid selection: sample p' candidates without replacement, then k-means
/// them into p clusters and keep the centers. The clustering stage touches
/// only the p' candidates, so its cost is independent of the dataset size.
pub fn select_hybrid(data: &Dataset, p: usize, p_prime: usize, seed: u64) -> Result<RepresentativeSet> {
    select_hybrid_with(data, p, p_prime, &KMeansOptions::default(), seed)
}

pub fn select_hybrid_with(
    data: &Dataset,
    p: usize,
    p_prime: usize,
    opts: &KMeansOptions,
    seed: u64,
) -> Result<RepresentativeSet> {
    hybrid_impl(data, p, p_prime, opts, seed)
}

/// Dispatch helper for the CLI's --select flag.
pub fn select_with(
    data: &Dataset,
    strategy: Selection,
    p: usize,
    p_prime: usize,
    opts: &KMeansOptions,
    seed: u64,
) -> Result<RepresentativeSet> {
    match strategy {
        Selection::Random => select_random(data, p, seed),
        Selection::Kmeans => select_kmeans_with(data, p, opts, seed),
        Selection::Hybrid => select_hybrid_with(data, p, p_prime, opts, seed),
    }
}

fn hybrid_impl(
    data: &Dataset,
    p: usize,
    p_prime: usize,
    opts: &KMeansOptions,
    seed: u64,
) -> Result<RepresentativeSet> {
    if p == 0 || p > p_prime || p_prime > data.n() {
        return Err(Error::Value(format!(
            "need 1 <= p <= p' <= n, got p={p}, p'={p_prime}, n={}",
            data.n()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let rows = sample_rows(data.n(), p_prime, &mut rng);
    let candidates = data.gather(&rows)?;
    let km = kmeans(&candidates, p, opts, &mut rng)?;
    Ok(RepresentativeSet {
        reps: Dataset::new(p, data.dim(), km.centers)?,
        strategy: Selection::Hybrid,
        seed,
    })
}

fn sample_rows(n: usize, amount: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    sample(rng, n, amount).into_vec()
}
