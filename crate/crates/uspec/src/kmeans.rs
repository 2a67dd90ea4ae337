//! Seeded Lloyd k-means with k-means++ initialization.
//!
//! This is the workhorse behind representative selection, rep-cluster
//! construction, and embedding discretization. Results are bit-deterministic
//! for a fixed seed regardless of thread count: the assignment step is
//! parallel over objects (each object's label depends only on the centers),
//! while every reduction (center accumulation, inertia) runs in a fixed
//! sequential order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::{Dataset, Labeling};
use crate::dist::sq_dist;
use crate::error::{Error, Result};

/// Default Lloyd iteration cap.
pub const DEFAULT_T_MAX: usize = 100;
/// Default convergence tolerance on the maximum squared center displacement.
pub const DEFAULT_TOL: f64 = 1e-8;

const PAR_CHUNK: usize = 4096;
const MAX_REPAIR_ROUNDS: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    pub t_max: usize,
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            t_max: DEFAULT_T_MAX,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    /// k x d centers, row-major.
    pub centers: Vec<f64>,
    pub dim: usize,
    pub labels: Labeling,
    /// Sum of squared distances from each object to its assigned center.
    pub inertia: f64,
    /// Lloyd iterations actually run.
    pub iterations: usize,
    /// Post-update inertia after each iteration; non-increasing.
    pub inertia_trace: Vec<f64>,
}

impl KMeansResult {
    #[inline]
    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.dim..(j + 1) * self.dim]
    }
}

/// k-means++ seeding: the first center is uniform, each further center is
/// drawn with probability proportional to the squared distance from the
/// nearest chosen center. Always returns k distinct row indices.
pub fn kmeanspp_init(data: &Dataset, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let indices = kmeanspp_indices(data.values(), data.n(), data.dim(), k, rng)?;
    let mut centers = Vec::with_capacity(k * data.dim());
    for &i in &indices {
        centers.extend_from_slice(data.row(i));
    }
    Ok(centers)
}

fn kmeanspp_indices(
    values: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::Value(format!(
            "k-means++ needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut chosen = vec![false; n];
    let mut picks = Vec::with_capacity(k);
    let first = rng.gen_range(0..n);
    picks.push(first);
    chosen[first] = true;

    let mut min_d2 = vec![0.0f64; n];
    update_min_d2(values, n, dim, &mut min_d2, &values[first * dim..(first + 1) * dim], true);

    while picks.len() < k {
        let total: f64 = min_d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen_range(0.0..total);
            let mut pick = None;
            for (i, &w) in min_d2.iter().enumerate() {
                r -= w;
                if r < 0.0 && !chosen[i] {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can exhaust the scan; fall back to the last
            // positive-weight unchosen index.
            pick.unwrap_or_else(|| {
                (0..n)
                    .rev()
                    .find(|&i| !chosen[i] && min_d2[i] > 0.0)
                    .unwrap_or_else(|| (0..n).find(|&i| !chosen[i]).unwrap())
            })
        } else {
            // All remaining points coincide with a chosen center; pick
            // uniformly among the unchosen ones so k distinct indices
            // are still returned.
            let remaining: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            remaining[rng.gen_range(0..remaining.len())]
        };
        chosen[next] = true;
        picks.push(next);
        update_min_d2(values, n, dim, &mut min_d2, &values[next * dim..(next + 1) * dim], false);
    }
    Ok(picks)
}

fn update_min_d2(
    values: &[f64],
    _n: usize,
    dim: usize,
    min_d2: &mut [f64],
    center: &[f64],
    init: bool,
) {
    min_d2
        .par_chunks_mut(PAR_CHUNK)
        .zip(values.par_chunks(PAR_CHUNK * dim))
        .for_each(|(dchunk, vchunk)| {
            for (slot, row) in dchunk.iter_mut().zip(vchunk.chunks_exact(dim)) {
                let d = sq_dist(row, center);
                if init || d < *slot {
                    *slot = d;
                }
            }
        });
}

/// Lloyd k-means over the rows of `data`.
///
/// Iterates until the maximum squared center displacement is at most
/// `opts.tol` or `opts.t_max` iterations have run. Clusters left empty by an
/// assignment are repaired by moving in the point farthest from its current
/// center, so the result has k non-empty clusters whenever the data admits
/// them. On return `labels[i]` is the argmin-distance center of object i,
/// with ties broken toward the lowest center index.
pub fn kmeans(
    data: &Dataset,
    k: usize,
    opts: &KMeansOptions,
    rng: &mut ChaCha8Rng,
) -> Result<KMeansResult> {
    kmeans_flat(data.values(), data.n(), data.dim(), k, opts, rng)
}

pub(crate) fn kmeans_flat(
    values: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    opts: &KMeansOptions,
    rng: &mut ChaCha8Rng,
) -> Result<KMeansResult> {
    if k == 0 || k > n {
        return Err(Error::Value(format!(
            "k-means needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    if opts.t_max < 1 {
        return Err(Error::Value("t_max must be >= 1".into()));
    }
    if !(opts.tol >= 0.0) {
        return Err(Error::Value("tol must be >= 0".into()));
    }

    let seeds = kmeanspp_indices(values, n, dim, k, rng)?;
    let mut centers = Vec::with_capacity(k * dim);
    for &i in &seeds {
        centers.extend_from_slice(&values[i * dim..(i + 1) * dim]);
    }

    let mut labels = vec![0usize; n];
    let mut d2 = vec![0.0f64; n];
    let mut counts = vec![0usize; k];
    let mut trace = Vec::new();
    let mut iterations = 0;

    for t in 1..=opts.t_max {
        assign_with_repair(values, n, dim, &mut centers, k, &mut labels, &mut d2, &mut counts);

        // New centers: sequential accumulation in object order keeps the
        // result independent of thread count.
        let mut sums = vec![0.0f64; k * dim];
        for (i, row) in values.chunks_exact(dim).enumerate() {
            let base = labels[i] * dim;
            for (s, v) in sums[base..base + dim].iter_mut().zip(row) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for j in 0..k {
            if counts[j] == 0 {
                continue; // unrepairable empty cluster keeps its center
            }
            let inv = 1.0 / counts[j] as f64;
            let base = j * dim;
            let mut disp = 0.0;
            for t in 0..dim {
                let new = sums[base + t] * inv;
                let d = new - centers[base + t];
                disp += d * d;
                centers[base + t] = new;
            }
            shift = shift.max(disp);
        }

        trace.push(inertia_of(values, dim, &centers, &labels));
        iterations = t;
        if shift <= opts.tol {
            break;
        }
    }

    // Final pass so the returned labels are the nearest-center assignment of
    // the returned centers.
    assign_with_repair(values, n, dim, &mut centers, k, &mut labels, &mut d2, &mut counts);
    let inertia: f64 = d2.iter().sum();

    Ok(KMeansResult {
        centers,
        dim,
        labels: Labeling::new(labels, k)?,
        inertia,
        iterations,
        inertia_trace: trace,
    })
}

/// Assigns every object to its nearest center (ties toward the lowest center
/// index). If the assignment leaves clusters empty, the point farthest from
/// its current center (among clusters with at least two members) is moved
/// into each empty cluster, that cluster's center is replaced by the point,
/// and the assignment is recomputed; the loop always exits on a pure argmin
/// assignment.
#[allow(clippy::too_many_arguments)]
fn assign_with_repair(
    values: &[f64],
    n: usize,
    dim: usize,
    centers: &mut [f64],
    k: usize,
    labels: &mut [usize],
    d2: &mut [f64],
    counts: &mut [usize],
) {
    for _round in 0..MAX_REPAIR_ROUNDS {
        assign_points(values, dim, centers, labels, d2);
        counts.iter_mut().for_each(|c| *c = 0);
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let empties: Vec<usize> = (0..k).filter(|&j| counts[j] == 0).collect();
        if empties.is_empty() {
            return;
        }

        let mut plan = Vec::new();
        {
            let mut counts_now = counts.to_vec();
            for &e in &empties {
                let mut best: Option<(usize, f64)> = None;
                for i in 0..n {
                    if counts_now[labels[i]] < 2 {
                        continue;
                    }
                    let better = match best {
                        None => d2[i] > 0.0,
                        Some((_, bd)) => d2[i] > bd,
                    };
                    if better {
                        best = Some((i, d2[i]));
                    }
                }
                match best {
                    Some((i, _)) => {
                        counts_now[labels[i]] -= 1;
                        counts_now[e] += 1;
                        plan.push((e, i));
                    }
                    None => break, // all candidates coincide with their centers
                }
            }
        }
        if plan.is_empty() {
            // Nothing improvable (duplicate-heavy degenerate data); the
            // current labels are already a pure argmin assignment.
            return;
        }
        for (e, i) in plan {
            centers[e * dim..(e + 1) * dim].copy_from_slice(&values[i * dim..(i + 1) * dim]);
        }
    }
    // Round cap reached: leave the last pure assignment in place.
    assign_points(values, dim, centers, labels, d2);
    counts.iter_mut().for_each(|c| *c = 0);
    for &l in labels.iter() {
        counts[l] += 1;
    }
}

fn assign_points(values: &[f64], dim: usize, centers: &[f64], labels: &mut [usize], d2: &mut [f64]) {
    labels
        .par_chunks_mut(PAR_CHUNK)
        .zip(d2.par_chunks_mut(PAR_CHUNK))
        .zip(values.par_chunks(PAR_CHUNK * dim))
        .for_each(|((lchunk, dchunk), vchunk)| {
            if dim == 2 {
                for ((label, dist), row) in
                    lchunk.iter_mut().zip(dchunk.iter_mut()).zip(vchunk.chunks_exact(2))
                {
                    let (x, y) = (row[0], row[1]);
                    let mut best = f64::INFINITY;
                    let mut best_j = 0usize;
                    for (j, c) in centers.chunks_exact(2).enumerate() {
                        let dx = x - c[0];
                        let dy = y - c[1];
                        let d = dx * dx + dy * dy;
                        if d < best {
                            best = d;
                            best_j = j;
                        }
                    }
                    *label = best_j;
                    *dist = best;
                }
            } else {
                for ((label, dist), row) in
                    lchunk.iter_mut().zip(dchunk.iter_mut()).zip(vchunk.chunks_exact(dim))
                {
                    let mut best = f64::INFINITY;
                    let mut best_j = 0usize;
                    for (j, c) in centers.chunks_exact(dim).enumerate() {
                        let d = sq_dist(row, c);
                        if d < best {
                            best = d;
                            best_j = j;
                        }
                    }
                    *label = best_j;
                    *dist = best;
                }
            }
        });
}

fn inertia_of(values: &[f64], dim: usize, centers: &[f64], labels: &[usize]) -> f64 {
    values
        .chunks_exact(dim)
        .zip(labels)
        .map(|(row, &l)| sq_dist(row, &centers[l * dim..(l + 1) * dim]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    fn dataset(rows: &[[f64; 2]]) -> Dataset {
        Dataset::new(rows.len(), 2, rows.iter().flatten().copied().collect()).unwrap()
    }

    /// Exhaustive optimum of the k-means objective over all label vectors.
    fn brute_force_best_inertia(data: &Dataset, k: usize) -> f64 {
        let n = data.n();
        let mut best = f64::INFINITY;
        let mut labels = vec![0usize; n];
        loop {
            // WCSS with per-cluster means.
            let mut sums = vec![0.0; k * data.dim()];
            let mut counts = vec![0usize; k];
            for i in 0..n {
                counts[labels[i]] += 1;
                for t in 0..data.dim() {
                    sums[labels[i] * data.dim() + t] += data.row(i)[t];
                }
            }
            let mut j = 0.0;
            for i in 0..n {
                let l = labels[i];
                if counts[l] == 0 {
                    continue;
                }
                for t in 0..data.dim() {
                    let c = sums[l * data.dim() + t] / counts[l] as f64;
                    let d = data.row(i)[t] - c;
                    j += d * d;
                }
            }
            if counts.iter().all(|&c| c > 0) {
                best = best.min(j);
            }
            // next label vector
            let mut pos = 0;
            loop {
                if pos == n {
                    return best;
                }
                labels[pos] += 1;
                if labels[pos] < k {
                    break;
                }
                labels[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn two_separated_pairs() {
        let data = dataset(&[[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]]);
        let oracle = brute_force_best_inertia(&data, 2);
        assert!((oracle - 1.0).abs() < 1e-12);
        let mut rng = rng_from_seed(3);
        let res = kmeans(&data, 2, &KMeansOptions::default(), &mut rng).unwrap();
        assert!((res.inertia - 1.0).abs() < 1e-9, "inertia {}", res.inertia);
        let mut centers: Vec<Vec<f64>> =
            (0..2).map(|j| res.center(j).to_vec()).collect();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(centers[0], vec![0.0, 0.5]);
        assert_eq!(centers[1], vec![10.0, 10.5]);
    }

    #[test]
    fn k_one_gives_mean_and_total_variance() {
        let data = dataset(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]]);
        let mut rng = rng_from_seed(1);
        let res = kmeans(&data, 1, &KMeansOptions::default(), &mut rng).unwrap();
        assert_eq!(res.center(0), &[1.0, 1.0]);
        assert!((res.inertia - 8.0).abs() < 1e-12); // 4 points at squared distance 2
    }

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let data = dataset(&[[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [9.0, 2.0]]);
        let mut rng = rng_from_seed(7);
        let res = kmeans(&data, 4, &KMeansOptions::default(), &mut rng).unwrap();
        assert_eq!(res.inertia, 0.0);
    }

    #[test]
    fn kmeanspp_exhausts_on_k_equals_n() {
        let data = dataset(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let mut rng = rng_from_seed(5);
        let centers = kmeanspp_init(&data, 3, &mut rng).unwrap();
        let mut xs: Vec<f64> = centers.chunks_exact(2).map(|c| c[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(xs, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn kmeanspp_deterministic() {
        let data = dataset(&[[0.0, 0.0], [1.0, 3.0], [4.0, 0.5], [2.0, 2.0], [8.0, 1.0]]);
        let a = kmeanspp_init(&data, 3, &mut rng_from_seed(11)).unwrap();
        let b = kmeanspp_init(&data, 3, &mut rng_from_seed(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kmeanspp_rejects_k_above_n() {
        let data = dataset(&[[0.0, 0.0]]);
        assert!(kmeanspp_init(&data, 2, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn labels_are_argmin_of_returned_centers() {
        let data = dataset(&[
            [0.1, 0.2],
            [0.0, 0.9],
            [4.0, 4.2],
            [3.9, 3.7],
            [8.0, 0.0],
            [8.2, 0.3],
        ]);
        for seed in 0..20 {
            let mut rng = rng_from_seed(seed);
            let res = kmeans(&data, 3, &KMeansOptions::default(), &mut rng).unwrap();
            for i in 0..data.n() {
                let (want, _) =
                    crate::dist::nearest_row(data.row(i), &res.centers, res.dim);
                assert_eq!(res.labels.as_slice()[i], want, "seed {seed}, object {i}");
            }
        }
    }

    #[test]
    fn empty_cluster_repair_produces_k_nonempty_clusters() {
        // Two identical far-apart pairs force duplicate seeds under some
        // streams; with k=3 a cluster must be repaired.
        let data = dataset(&[
            [0.0, 0.0],
            [0.0, 0.0],
            [0.0, 0.1],
            [10.0, 10.0],
            [10.0, 10.0],
            [10.0, 10.1],
        ]);
        for seed in 0..30 {
            let mut rng = rng_from_seed(seed);
            let res = kmeans(&data, 3, &KMeansOptions::default(), &mut rng).unwrap();
            let mut counts = vec![0usize; 3];
            for &l in res.labels.as_slice() {
                counts[l] += 1;
            }
            assert!(counts.iter().all(|&c| c > 0), "seed {seed}: {counts:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn inertia_trace_non_increasing(
            seed in 0u64..1000,
            n in 6usize..40,
            k in 1usize..6,
        ) {
            prop_assume!(k <= n);
            let mut rng = rng_from_seed(seed);
            let values: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let data = Dataset::new(n, 2, values).unwrap();
            let res = kmeans(&data, k, &KMeansOptions::default(), &mut rng_from_seed(seed)).unwrap();
            for w in res.inertia_trace.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9, "trace {:?}", res.inertia_trace);
            }
        }

        #[test]
        fn deterministic_given_seed(seed in 0u64..500) {
            let mut rng = rng_from_seed(seed ^ 0xABCD);
            let values: Vec<f64> = (0..60).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let data = Dataset::new(30, 2, values).unwrap();
            let a = kmeans(&data, 4, &KMeansOptions::default(), &mut rng_from_seed(seed)).unwrap();
            let b = kmeans(&data, 4, &KMeansOptions::default(), &mut rng_from_seed(seed)).unwrap();
            prop_assert_eq!(a.labels.as_slice(), b.labels.as_slice());
            prop_assert_eq!(a.centers, b.centers);
        }
    }
}
