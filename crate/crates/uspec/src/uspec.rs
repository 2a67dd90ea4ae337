//! The single-shot spectral clustering pipeline: hybrid representative
//! selection, approximate K-nearest-representative affinity, transfer cut.

use std::time::Instant;

use crate::affinity::{approx_knn_all, build_affinity, build_rep_index, exact_knn, KnnMode};
use crate::config::RunConfig;
use crate::data::{Dataset, Labeling};
use crate::error::Result;
use crate::kmeans::{KMeansOptions, DEFAULT_TOL};
use crate::represent::{select_with, Selection};
use crate::rng::{derive_seed, domain};
use crate::tcut::{discretize_with, lift, reduce, solve_reduced};

/// Wall time of one pipeline phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTiming {
    pub name: String,
    pub seconds: f64,
}

/// Final labels plus the provenance needed to report a run: per-phase wall
/// times, the configuration snapshot, and the kernel width that was used.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub labeling: Labeling,
    pub timings: Vec<PhaseTiming>,
    pub config: RunConfig,
    pub sigma: Option<f64>,
}

impl ClusteringResult {
    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|t| t.seconds).sum()
    }

    pub fn phase_seconds(&self, name: &str) -> Option<f64> {
        self.timings.iter().find(|t| t.name == name).map(|t| t.seconds)
    }
}

/// Pipeline switches exposed for the ablation studies.
#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub selection: Selection,
    pub knn: KnnMode,
    pub drop_trivial: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            selection: Selection::Hybrid,
            knn: KnnMode::Approx,
            drop_trivial: false,
        }
    }
}

/// Runs the pipeline with default options: hybrid selection and approximate
/// nearest representatives. Deterministic given (data, k, config.seed).
pub fn uspec(data: &Dataset, k: usize, config: &RunConfig) -> Result<ClusteringResult> {
    uspec_with(data, k, config, &PipelineOptions::default())
}

pub fn uspec_with(
    data: &Dataset,
    k: usize,
    config: &RunConfig,
    opts: &PipelineOptions,
) -> Result<ClusteringResult> {
    let mut config = config.clone();
    config.k = k;
    let eff = config.effective(data.n())?;
    let kopts = KMeansOptions {
        t_max: config.t_max,
        tol: DEFAULT_TOL,
    };
    let mut timings = Vec::with_capacity(5);

    let t = Instant::now();
    let reps = select_with(
        data,
        opts.selection,
        eff.p,
        eff.p_prime,
        &kopts,
        derive_seed(config.seed, domain::SELECT),
    )?;
    timings.push(PhaseTiming {
        name: "selection".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let index = match opts.knn {
        KnnMode::Approx => Some(build_rep_index(
            &reps,
            eff.k_prime,
            derive_seed(config.seed, domain::INDEX),
        )?),
        KnnMode::Exact => None,
    };
    timings.push(PhaseTiming {
        name: "index".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let neighbors = match &index {
        Some(index) => approx_knn_all(data, &reps, index, eff.k_nearest)?,
        None => exact_knn(data, &reps, eff.k_nearest)?,
    };
    let b = build_affinity(&neighbors, eff.p)?;
    timings.push(PhaseTiming {
        name: "affinity".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let problem = reduce(&b)?;
    let solve_k = if opts.drop_trivial { k + 1 } else { k };
    let (mut lambdas, mut v) = solve_reduced(&problem, solve_k)?;
    if opts.drop_trivial {
        lambdas.remove(0);
        let mut vk = vec![0.0f64; problem.p * k];
        for j in 0..problem.p {
            vk[j * k..(j + 1) * k].copy_from_slice(&v[j * solve_k + 1..(j + 1) * solve_k]);
        }
        v = vk;
    }
    let embedding = lift(&b, &problem.d_x, &v, &lambdas)?;
    timings.push(PhaseTiming {
        name: "eigen".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let labeling = discretize_with(
        &embedding,
        k,
        &kopts,
        derive_seed(config.seed, domain::DISCRETIZE),
    )?;
    timings.push(PhaseTiming {
        name: "discretize".into(),
        seconds: t.elapsed().as_secs_f64(),
    });

    Ok(ClusteringResult {
        labeling,
        timings,
        config,
        sigma: b.sigma(),
    })
}
