//! Ensemble clustering: m diversified base runs of the spectral pipeline,
//! combined through an object-by-cluster bipartite graph and one more
//! transfer cut.
//!
//! Diversity comes from two sources: each member draws its own representative
//! set from an independent sub-seed, and each member's cluster count is drawn
//! uniformly from [k_min, k_max]. Members are independent given their
//! sub-seeds, so they may run in any order or in parallel without changing
//! the result.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::data::{Dataset, Labeling};
use crate::error::{Error, Result};
use crate::kmeans::{KMeansOptions, DEFAULT_TOL};
use crate::rng::{derive_seed, domain, rng_from_seed};
use crate::sparse::SparseAffinity;
use crate::tcut::{tcut_with, TcutOptions};
use crate::uspec::{uspec_with, ClusteringResult, PhaseTiming, PipelineOptions};

/// Ensemble of m base clusterings with the global cluster-id layout.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub members: Vec<Labeling>,
    /// Cluster count actually used by each member.
    pub member_k: Vec<usize>,
    /// Cumulative offsets mapping (member, local cluster) to a global id.
    pub offsets: Vec<usize>,
    /// Total cluster count across members.
    pub k_c: usize,
}

impl Ensemble {
    pub fn m(&self) -> usize {
        self.members.len()
    }

    pub fn global_cluster(&self, member: usize, local: usize) -> usize {
        self.offsets[member] + local
    }
}

/// Applies the member cluster-count formula k = floor(tau * (k_max - k_min)) + k_min.
pub fn member_k_from_tau(tau: f64, k_min: usize, k_max: usize) -> usize {
    let span = (k_max - k_min) as f64;
    (tau * span).floor() as usize + k_min
}

/// Draws a member cluster count with tau uniform on [0, 1].
pub fn draw_member_k(k_min: usize, k_max: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
    if k_min < 2 || k_min > k_max {
        return Err(Error::Value(format!(
            "need 2 <= k_min <= k_max, got [{k_min}, {k_max}]"
        )));
    }
    let tau: f64 = rng.gen();
    Ok(member_k_from_tau(tau, k_min, k_max))
}

/// Generates m base clusterings. Member i pulls every random choice from
/// seed = derive(master, MEMBER + i), so the ensemble is reproducible and
/// independent of scheduling.
pub fn generate_ensemble(
    data: &Dataset,
    m: usize,
    config: &RunConfig,
    opts: &PipelineOptions,
) -> Result<Ensemble> {
    if m == 0 {
        return Err(Error::Value("ensemble size m must be >= 1".into()));
    }
    let eff = config.effective(data.n())?;

    let runs: Vec<Result<(usize, Labeling)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let member_seed = derive_seed(config.seed, domain::MEMBER + i as u64);
            let mut krng = rng_from_seed(derive_seed(member_seed, domain::MEMBER_K));
            let drawn = draw_member_k(config.k_min, config.k_max, &mut krng)?;
            // A member cannot ask for more clusters than representatives or objects.
            let k_i = drawn.min(eff.p).min(data.n());
            let member_config = RunConfig {
                seed: member_seed,
                ..config.clone()
            };
            let result = uspec_with(data, k_i, &member_config, opts)?;
            Ok((k_i, result.labeling))
        })
        .collect();

    let mut members = Vec::with_capacity(m);
    let mut member_k = Vec::with_capacity(m);
    for run in runs {
        let (k_i, labeling) = run?;
        member_k.push(k_i);
        members.push(labeling);
    }
    let mut offsets = Vec::with_capacity(m);
    let mut k_c = 0usize;
    for &k_i in &member_k {
        offsets.push(k_c);
        k_c += k_i;
    }
    Ok(Ensemble {
        members,
        member_k,
        offsets,
        k_c,
    })
}

/// Builds the N x k_c object-by-cluster indicator graph: row i has a unit
/// entry in the global cluster that contains object i under each member, so
/// every row holds exactly m nonzeros. Base clusters that received no object
/// are dropped and the global ids compacted.
pub fn build_consensus_graph(ensemble: &Ensemble) -> Result<SparseAffinity> {
    let m = ensemble.m();
    let n = ensemble.members[0].len();
    if ensemble.members.iter().any(|l| l.len() != n) {
        return Err(Error::LengthMismatch {
            a: n,
            b: ensemble.members.iter().map(|l| l.len()).find(|&l| l != n).unwrap(),
        });
    }

    // Column compaction: map (member, local) to a dense id over used clusters.
    let mut col_of = Vec::with_capacity(ensemble.k_c);
    let mut k_c = 0usize;
    for (member, labeling) in ensemble.members.iter().enumerate() {
        let k_i = ensemble.member_k[member];
        let mut used = vec![false; k_i];
        for &l in labeling.as_slice() {
            used[l] = true;
        }
        if used.iter().any(|&u| !u) {
            log::warn!("dropping empty base clusters of ensemble member {member}");
        }
        for u in used {
            col_of.push(if u {
                let id = k_c;
                k_c += 1;
                Some(id)
            } else {
                None
            });
        }
    }

    let mut col_idx = Vec::with_capacity(n * m);
    let values = vec![1.0f64; n * m];
    for i in 0..n {
        for (member, labeling) in ensemble.members.iter().enumerate() {
            let local = labeling.as_slice()[i];
            let global = ensemble.offsets[member] + local;
            col_idx.push(col_of[global].expect("owning cluster cannot be empty"));
        }
    }
    SparseAffinity::new(n, k_c, m, col_idx, values, None)
}

/// Full ensemble pipeline: generate members, build the consensus graph,
/// partition it with the transfer cut.
pub fn usenc(data: &Dataset, k: usize, config: &RunConfig) -> Result<ClusteringResult> {
    usenc_with(data, k, config, &PipelineOptions::default())
}

pub fn usenc_with(
    data: &Dataset,
    k: usize,
    config: &RunConfig,
    opts: &PipelineOptions,
) -> Result<ClusteringResult> {
    let mut config = config.clone();
    config.k = k;
    let mut timings = Vec::with_capacity(3);

    let t = Instant::now();
    let ensemble = generate_ensemble(data, config.m, &config, opts)?;
    timings.push(PhaseTiming {
        name: "generation".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let graph = build_consensus_graph(&ensemble)?;
    timings.push(PhaseTiming {
        name: "consensus_graph".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let tcut_opts = TcutOptions {
        drop_trivial: opts.drop_trivial,
        kmeans: KMeansOptions {
            t_max: config.t_max,
            tol: DEFAULT_TOL,
        },
    };
    let (labeling, _) = tcut_with(
        &graph,
        k,
        &tcut_opts,
        derive_seed(config.seed, domain::CONSENSUS),
    )?;
    timings.push(PhaseTiming {
        name: "consensus_cut".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    Ok(ClusteringResult {
        labeling,
        timings,
        config,
        sigma: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::nmi;
    use crate::tcut::reduce;
    use rand::Rng;

    #[test]
    fn tau_formula_hits_bounds() {
        assert_eq!(member_k_from_tau(0.0, 20, 60), 20);
        assert_eq!(member_k_from_tau(1.0, 20, 60), 60);
        assert_eq!(member_k_from_tau(0.5, 20, 60), 40);
    }

    #[test]
    fn draw_member_k_stays_in_range() {
        let mut rng = rng_from_seed(4);
        for _ in 0..200 {
            let k = draw_member_k(20, 60, &mut rng).unwrap();
            assert!((20..=60).contains(&k));
        }
        assert!(draw_member_k(1, 5, &mut rng).is_err());
        assert!(draw_member_k(7, 5, &mut rng).is_err());
    }

    fn blobs(n_per: usize) -> (Dataset, Labeling) {
        let centers = [[0.0, 0.0], [8.0, 0.0], [0.0, 8.0], [8.0, 8.0]];
        let mut rng = rng_from_seed(1);
        let mut values = Vec::new();
        let mut truth = Vec::new();
        for (c, center) in centers.iter().enumerate() {
            for _ in 0..n_per {
                values.push(center[0] + rng.gen_range(-0.5..0.5));
                values.push(center[1] + rng.gen_range(-0.5..0.5));
                truth.push(c);
            }
        }
        let n = truth.len();
        (
            Dataset::new(n, 2, values).unwrap(),
            Labeling::new(truth, 4).unwrap(),
        )
    }

    fn small_config(seed: u64) -> RunConfig {
        RunConfig {
            p: 24,
            p_prime: 120,
            k_nearest: 3,
            k_prime: 12,
            m: 4,
            k_min: 4,
            k_max: 8,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn degenerate_single_member_ensemble() {
        let (data, _) = blobs(30);
        let config = RunConfig {
            m: 1,
            k_min: 4,
            k_max: 4,
            ..small_config(9)
        };
        let ens = generate_ensemble(&data, 1, &config, &PipelineOptions::default()).unwrap();
        assert_eq!(ens.m(), 1);
        assert_eq!(ens.member_k, vec![4]);
        assert_eq!(ens.k_c, 4);
    }

    #[test]
    fn ensemble_deterministic() {
        let (data, _) = blobs(25);
        let config = small_config(33);
        let a = generate_ensemble(&data, 4, &config, &PipelineOptions::default()).unwrap();
        let b = generate_ensemble(&data, 4, &config, &PipelineOptions::default()).unwrap();
        for (x, y) in a.members.iter().zip(b.members.iter()) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
        assert_eq!(a.member_k, b.member_k);
    }

    #[test]
    fn consensus_rows_have_m_ones_and_hand_case_matches() {
        let members = vec![
            Labeling::new(vec![0, 0, 1, 1], 2).unwrap(),
            Labeling::new(vec![0, 1, 0, 1], 2).unwrap(),
        ];
        let ens = Ensemble {
            members,
            member_k: vec![2, 2],
            offsets: vec![0, 2],
            k_c: 4,
        };
        let g = build_consensus_graph(&ens).unwrap();
        assert_eq!(g.rows(), 4);
        assert_eq!(g.cols(), 4);
        assert_eq!(g.nnz_per_row(), 2);
        assert!(g.row_sums().iter().all(|&s| s == 2.0));
        let expect = [(0usize, 2usize), (0, 3), (1, 2), (1, 3)];
        for (i, &(a, b)) in expect.iter().enumerate() {
            assert_eq!(g.row(i).0, &[a, b]);
            assert_eq!(g.row(i).1, &[1.0, 1.0]);
        }
    }

    #[test]
    fn empty_base_cluster_is_dropped() {
        // Member 1 never uses its cluster 2.
        let members = vec![
            Labeling::new(vec![0, 1, 0, 1], 2).unwrap(),
            Labeling::new(vec![0, 1, 1, 0], 3).unwrap(),
        ];
        let ens = Ensemble {
            members,
            member_k: vec![2, 3],
            offsets: vec![0, 2],
            k_c: 5,
        };
        let g = build_consensus_graph(&ens).unwrap();
        assert_eq!(g.cols(), 4);
        assert!(g.col_sums().iter().all(|&s| s > 0.0));
    }

    #[test]
    fn consensus_reduction_shortcut() {
        // With constant row sums m, E_C equals B~^T B~ / m.
        let (data, _) = blobs(25);
        let config = small_config(12);
        let ens = generate_ensemble(&data, 4, &config, &PipelineOptions::default()).unwrap();
        let g = build_consensus_graph(&ens).unwrap();
        let prob = reduce(&g).unwrap();
        let dense = g.to_dense();
        let (n, kc) = (g.rows(), g.cols());
        let m = g.nnz_per_row() as f64;
        for a in 0..kc {
            for c in 0..kc {
                let mut want = 0.0;
                for i in 0..n {
                    want += dense[i * kc + a] * dense[i * kc + c];
                }
                want /= m;
                assert!(
                    (prob.e_r[a * kc + c] - want).abs() < 1e-12,
                    "entry ({a},{c})"
                );
            }
        }
    }

    #[test]
    fn identical_members_reproduce_the_partition() {
        let base = Labeling::new(
            vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3],
            4,
        )
        .unwrap();
        let m = 5;
        let ens = Ensemble {
            members: vec![base.clone(); m],
            member_k: vec![4; m],
            offsets: (0..m).map(|i| i * 4).collect(),
            k_c: 4 * m,
        };
        let g = build_consensus_graph(&ens).unwrap();
        let (labels, _) = tcut_with(&g, 4, &TcutOptions::default(), 3).unwrap();
        let score = nmi(&labels, &base).unwrap();
        assert!((score - 1.0).abs() < 1e-12, "nmi = {score}");
    }

    #[test]
    fn usenc_end_to_end_deterministic() {
        let (data, truth) = blobs(25);
        let config = small_config(77);
        let a = usenc(&data, 4, &config).unwrap();
        let b = usenc(&data, 4, &config).unwrap();
        assert_eq!(a.labeling.as_slice(), b.labeling.as_slice());
        let names: Vec<&str> = a.timings.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, vec!["generation", "consensus_graph", "consensus_cut"]);
        // Clean blobs: the consensus should recover the truth.
        let score = nmi(&a.labeling, &truth).unwrap();
        assert!(score > 0.95, "nmi = {score}");
    }

    #[test]
    fn ensembles_draw_diverse_member_counts() {
        // With a span of at least 10, at least two distinct k^i per ensemble;
        // allow one failure in 20 seeds.
        let (data, _) = blobs(15);
        let mut failures = 0;
        for seed in 0..20 {
            let config = RunConfig {
                p: 20,
                p_prime: 60,
                k_nearest: 3,
                k_prime: 10,
                m: 6,
                k_min: 4,
                k_max: 14,
                seed,
                ..Default::default()
            };
            let ens = generate_ensemble(&data, 6, &config, &PipelineOptions::default()).unwrap();
            let mut ks = ens.member_k.clone();
            ks.dedup();
            let distinct = ens.member_k.iter().collect::<std::collections::HashSet<_>>().len();
            if distinct < 2 {
                failures += 1;
            }
        }
        assert!(failures <= 1, "{failures} of 20 ensembles had uniform k");
    }
}
