//! Approximate K-nearest-representative search and sparse cross-affinity
//! construction.
//!
//! The search is coarse-to-fine: representatives are pre-grouped into
//! rep-clusters, each query first picks the nearest rep-cluster center, then
//! the nearest representative inside it, and finally ranks that
//! representative together with its precomputed K' nearest neighbors. Every
//! nearest-anything decision breaks ties toward the lowest index, which makes
//! the whole construction deterministic.

use rayon::prelude::*;

use crate::data::Dataset;
use crate::dist::{nearest_row, sq_dist};
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, KMeansOptions};
use crate::represent::RepresentativeSet;
use crate::rng::rng_from_seed;
use crate::sparse::SparseAffinity;

const PAR_CHUNK: usize = 4096;

/// Mode flag for the CLI's --knn switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnMode {
    Approx,
    Exact,
}

impl std::str::FromStr for KnnMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "approx" => Ok(KnnMode::Approx),
            "exact" => Ok(KnnMode::Exact),
            other => Err(Error::Value(format!("unknown knn mode '{other}'"))),
        }
    }
}

/// Coarse-to-fine search structure over a representative set.
#[derive(Debug, Clone)]
pub struct RepClusterIndex {
    /// z1 rep-cluster centers, row-major.
    centers: Vec<f64>,
    dim: usize,
    /// Representative indices per rep-cluster; ascending within each list.
    members: Vec<Vec<usize>>,
    rep_to_cluster: Vec<usize>,
    /// p x K' nearest-neighbor table among representatives, each row sorted
    /// ascending by distance (ties by index).
    knn_table: Vec<usize>,
    k_prime: usize,
}

impl RepClusterIndex {
    pub fn z1(&self) -> usize {
        self.members.len()
    }

    pub fn k_prime(&self) -> usize {
        self.k_prime
    }

    pub fn members(&self, cluster: usize) -> &[usize] {
        &self.members[cluster]
    }

    pub fn cluster_of(&self, rep: usize) -> usize {
        self.rep_to_cluster[rep]
    }

    pub fn neighbors(&self, rep: usize) -> &[usize] {
        &self.knn_table[rep * self.k_prime..(rep + 1) * self.k_prime]
    }
}

/// Builds the rep-cluster index with z1 = floor(sqrt(p)) clusters.
pub fn build_rep_index(reps: &RepresentativeSet, k_prime: usize, seed: u64) -> Result<RepClusterIndex> {
    let z1 = (reps.p() as f64).sqrt().floor() as usize;
    build_rep_index_with_z1(reps, k_prime, z1.max(1), seed)
}

/// Index builder with an explicit rep-cluster count; z1 = 1 degenerates the
/// search to an exact scan and is used by the ablation tests.
pub fn build_rep_index_with_z1(
    reps: &RepresentativeSet,
    k_prime: usize,
    z1: usize,
    seed: u64,
) -> Result<RepClusterIndex> {
    let p = reps.p();
    if k_prime >= p {
        return Err(Error::Value(format!(
            "candidate neighborhood K'={k_prime} must be below p={p}"
        )));
    }
    if z1 == 0 || z1 > p {
        return Err(Error::Value(format!("need 1 <= z1 <= p, got z1={z1}, p={p}")));
    }

    let mut rng = rng_from_seed(seed);
    let km = kmeans(&reps.reps, z1, &KMeansOptions::default(), &mut rng)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); z1];
    for (rep, &cluster) in km.labels.as_slice().iter().enumerate() {
        members[cluster].push(rep);
    }

    // Degenerate duplicate-heavy sets can leave a cluster empty; drop such
    // clusters so step 2 always scans a non-empty winner.
    let mut centers = Vec::with_capacity(z1 * reps.dim());
    let mut kept_members = Vec::with_capacity(z1);
    for (cluster, list) in members.into_iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        centers.extend_from_slice(km.center(cluster));
        kept_members.push(list);
    }
    let mut rep_to_cluster = vec![0usize; p];
    for (cluster, list) in kept_members.iter().enumerate() {
        for &rep in list {
            rep_to_cluster[rep] = cluster;
        }
    }

    // Exact all-pairs K'-NN among representatives. O(p^2) is fine: p << N.
    let dim = reps.dim();
    let values = reps.reps.values();
    let knn_table: Vec<usize> = (0..p)
        .into_par_iter()
        .flat_map_iter(|r| {
            let row = &values[r * dim..(r + 1) * dim];
            let mut dists: Vec<(f64, usize)> = (0..p)
                .filter(|&j| j != r)
                .map(|j| (sq_dist(row, &values[j * dim..(j + 1) * dim]), j))
                .collect();
            if k_prime < dists.len() {
                dists.select_nth_unstable_by(k_prime, |a, b| a.partial_cmp(b).unwrap());
                dists.truncate(k_prime);
            }
            dists.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            dists.into_iter().map(|(_, j)| j)
        })
        .collect();

    Ok(RepClusterIndex {
        centers,
        dim,
        members: kept_members,
        rep_to_cluster,
        knn_table,
        k_prime,
    })
}

/// Fixed-width neighbor lists: for each of n objects, exactly k
/// (representative index, squared distance) pairs sorted ascending by
/// distance with ties toward the lower index.
#[derive(Debug, Clone)]
pub struct NeighborLists {
    n: usize,
    k: usize,
    indices: Vec<usize>,
    sq_dists: Vec<f64>,
}

impl NeighborLists {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = i * self.k;
        let hi = lo + self.k;
        (&self.indices[lo..hi], &self.sq_dists[lo..hi])
    }
}

/// Approximate K nearest representatives of a single query point.
///
/// Step 1 scans the rep-cluster centers, step 2 the members of the winning
/// rep-cluster, step 3 ranks the nearest representative together with its K'
/// stored neighbors. The result is an approximation: it need not equal the
/// true K nearest set.
pub fn approx_knn(
    x: &[f64],
    reps: &RepresentativeSet,
    index: &RepClusterIndex,
    k: usize,
) -> Result<Vec<(usize, f64)>> {
    check_query(x, reps, index, k)?;
    let mut idx = vec![0usize; k];
    let mut d2 = vec![0.0f64; k];
    approx_knn_into(x, reps, index, k, &mut idx, &mut d2);
    Ok(idx.into_iter().zip(d2).collect())
}

fn check_query(x: &[f64], reps: &RepresentativeSet, index: &RepClusterIndex, k: usize) -> Result<()> {
    if x.len() != reps.dim() {
        return Err(Error::DimensionMismatch {
            expected: reps.dim(),
            got: x.len(),
        });
    }
    if k == 0 || k > index.k_prime + 1 || k > reps.p() {
        return Err(Error::Value(format!(
            "need 1 <= K <= K'+1 and K <= p, got K={k}, K'={}, p={}",
            index.k_prime,
            reps.p()
        )));
    }
    Ok(())
}

fn approx_knn_into(
    x: &[f64],
    reps: &RepresentativeSet,
    index: &RepClusterIndex,
    k: usize,
    out_idx: &mut [usize],
    out_d2: &mut [f64],
) {
    // Step 1: nearest rep-cluster center.
    let (cluster, _) = nearest_row(x, &index.centers, index.dim);

    // Step 2: nearest representative inside the winning rep-cluster.
    let values = reps.reps.values();
    let dim = index.dim;
    let mut best = f64::INFINITY;
    let mut nearest_rep = index.members[cluster][0];
    for &rep in &index.members[cluster] {
        let d = sq_dist(x, &values[rep * dim..(rep + 1) * dim]);
        if d < best {
            best = d;
            nearest_rep = rep;
        }
    }

    // Step 3: keep the best K of the pool {r_l} union knn_table[r_l] by
    // running insertion into the output slots. Order is (distance, index),
    // so ties break toward the lower representative index.
    out_d2[..k].fill(f64::INFINITY);
    push_candidate(out_idx, out_d2, k, best, nearest_rep);
    for &rep in index.neighbors(nearest_rep) {
        let d = sq_dist(x, &values[rep * dim..(rep + 1) * dim]);
        push_candidate(out_idx, out_d2, k, d, rep);
    }
}

/// Inserts (d, rep) into the ascending top-k buffers if it beats the current
/// worst under the (distance, index) order.
#[inline(always)]
fn push_candidate(idx: &mut [usize], d2: &mut [f64], k: usize, d: f64, rep: usize) {
    let last = k - 1;
    if d > d2[last] || (d == d2[last] && rep > idx[last] && d2[last].is_finite()) {
        return;
    }
    let mut slot = last;
    while slot > 0 && (d < d2[slot - 1] || (d == d2[slot - 1] && rep < idx[slot - 1])) {
        d2[slot] = d2[slot - 1];
        idx[slot] = idx[slot - 1];
        slot -= 1;
    }
    d2[slot] = d;
    idx[slot] = rep;
}

/// Approximate K-nearest representatives for every object, processed in
/// fixed-size row blocks in parallel. Block boundaries do not affect the
/// output, so results are identical for any thread count.
pub fn approx_knn_all(
    data: &Dataset,
    reps: &RepresentativeSet,
    index: &RepClusterIndex,
    k: usize,
) -> Result<NeighborLists> {
    check_query(data.row(0), reps, index, k)?;
    let n = data.n();
    let dim = data.dim();
    let mut indices = vec![0usize; n * k];
    let mut sq_dists = vec![0.0f64; n * k];

    indices
        .par_chunks_mut(PAR_CHUNK * k)
        .zip(sq_dists.par_chunks_mut(PAR_CHUNK * k))
        .zip(data.values().par_chunks(PAR_CHUNK * dim))
        .for_each(|((ichunk, dchunk), vchunk)| {
            for ((irow, drow), x) in ichunk
                .chunks_exact_mut(k)
                .zip(dchunk.chunks_exact_mut(k))
                .zip(vchunk.chunks_exact(dim))
            {
                approx_knn_into(x, reps, index, k, irow, drow);
            }
        });

    Ok(NeighborLists {
        n,
        k,
        indices,
        sq_dists,
    })
}

/// True K nearest representatives for every object by a full N x p scan.
/// This is the ablation oracle the approximate search is judged against.
pub fn exact_knn(data: &Dataset, reps: &RepresentativeSet, k: usize) -> Result<NeighborLists> {
    if data.dim() != reps.dim() {
        return Err(Error::DimensionMismatch {
            expected: reps.dim(),
            got: data.dim(),
        });
    }
    let p = reps.p();
    if k == 0 || k > p {
        return Err(Error::Value(format!("need 1 <= K <= p, got K={k}, p={p}")));
    }
    let n = data.n();
    let dim = data.dim();
    let rep_values = reps.reps.values();
    let mut indices = vec![0usize; n * k];
    let mut sq_dists = vec![0.0f64; n * k];

    indices
        .par_chunks_mut(PAR_CHUNK * k)
        .zip(sq_dists.par_chunks_mut(PAR_CHUNK * k))
        .zip(data.values().par_chunks(PAR_CHUNK * dim))
        .for_each(|((ichunk, dchunk), vchunk)| {
            let mut dists: Vec<(f64, usize)> = Vec::with_capacity(p);
            for ((irow, drow), x) in ichunk
                .chunks_exact_mut(k)
                .zip(dchunk.chunks_exact_mut(k))
                .zip(vchunk.chunks_exact(dim))
            {
                dists.clear();
                dists.extend(
                    rep_values
                        .chunks_exact(dim)
                        .enumerate()
                        .map(|(j, r)| (sq_dist(x, r), j)),
                );
                if k < dists.len() {
                    dists.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
                    dists.truncate(k);
                }
                dists.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                for (slot, &(d, j)) in dists.iter().take(k).enumerate() {
                    irow[slot] = j;
                    drow[slot] = d;
                }
            }
        });

    Ok(NeighborLists {
        n,
        k,
        indices,
        sq_dists,
    })
}

/// Builds the sparse Gaussian cross-affinity matrix from retained neighbor
/// lists. The kernel width sigma is the mean plain Euclidean distance over
/// all retained pairs, computed in one deterministic pass. When every
/// retained distance is zero the kernel degenerates; all retained entries are
/// set to 1 and a warning is logged.
pub fn build_affinity(neighbors: &NeighborLists, cols: usize) -> Result<SparseAffinity> {
    let n = neighbors.n;
    let k = neighbors.k;

    // Ordered reduction for sigma: per-block partial sums collected in block
    // order, then folded sequentially.
    let partials: Vec<f64> = neighbors
        .sq_dists
        .par_chunks(PAR_CHUNK * k)
        .map(|chunk| chunk.iter().map(|d| d.sqrt()).sum::<f64>())
        .collect();
    let sigma = partials.iter().sum::<f64>() / (n * k) as f64;

    let mut col_idx = vec![0usize; n * k];
    let mut values = vec![0.0f64; n * k];
    let degenerate = sigma == 0.0;
    if degenerate {
        log::warn!("all retained distances are zero; emitting unit affinities");
    }
    let inv = if degenerate { 0.0 } else { 1.0 / (2.0 * sigma * sigma) };

    col_idx
        .par_chunks_mut(k)
        .zip(values.par_chunks_mut(k))
        .zip(neighbors.indices.par_chunks(k))
        .zip(neighbors.sq_dists.par_chunks(k))
        .for_each(|(((crow, vrow), irow), drow)| {
            let mut entries: Vec<(usize, f64)> = irow
                .iter()
                .zip(drow)
                .map(|(&j, &d2)| (j, if degenerate { 1.0 } else { (-d2 * inv).exp() }))
                .collect();
            entries.sort_unstable_by_key(|&(j, _)| j);
            for (slot, (j, v)) in entries.into_iter().enumerate() {
                crow[slot] = j;
                vrow[slot] = v;
            }
        });

    SparseAffinity::new(n, cols, k, col_idx, values, Some(sigma))
}
