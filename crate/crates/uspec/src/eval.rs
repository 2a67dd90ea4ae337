//! Clustering quality measures (NMI, clustering accuracy) and the
//! mean-over-runs report used by the benchmark protocol.

use crate::data::Labeling;
use crate::error::{Error, Result};
use crate::uspec::ClusteringResult;

/// Joint count table of two labelings over the same objects.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<usize>>,
    pub row_marginals: Vec<usize>,
    pub col_marginals: Vec<usize>,
    pub n: usize,
}

impl ContingencyTable {
    pub fn new(a: &Labeling, b: &Labeling) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch {
                a: a.len(),
                b: b.len(),
            });
        }
        let (ka, kb) = (a.k(), b.k());
        let mut counts = vec![vec![0usize; kb]; ka];
        for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
            counts[x][y] += 1;
        }
        let row_marginals: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
        let mut col_marginals = vec![0usize; kb];
        for row in &counts {
            for (j, &c) in row.iter().enumerate() {
                col_marginals[j] += c;
            }
        }
        Ok(Self {
            counts,
            row_marginals,
            col_marginals,
            n: a.len(),
        })
    }
}

fn entropy(marginals: &[usize], n: usize) -> f64 {
    let n = n as f64;
    marginals
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// True when the two labelings induce the same partition of the objects.
fn same_partition(t: &ContingencyTable) -> bool {
    // Each nonempty row maps to exactly one column and vice versa.
    for (i, row) in t.counts.iter().enumerate() {
        let nz: Vec<usize> = (0..row.len()).filter(|&j| row[j] > 0).collect();
        if nz.len() > 1 {
            return false;
        }
        if let Some(&j) = nz.first() {
            if t.counts[i][j] != t.col_marginals[j] {
                return false;
            }
        }
    }
    true
}

/// Normalized mutual information I(a;b) / sqrt(H(a) H(b)) with natural-log
/// entropies. When either entropy is zero the ratio is 0/0; it is defined as
/// 1 if the two labelings are the same set partition and 0 otherwise.
pub fn nmi(a: &Labeling, b: &Labeling) -> Result<f64> {
    let t = ContingencyTable::new(a, b)?;
    if same_partition(&t) {
        return Ok(1.0);
    }
    let ha = entropy(&t.row_marginals, t.n);
    let hb = entropy(&t.col_marginals, t.n);
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let n = t.n as f64;
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let pij = c as f64 / n;
            let pi = t.row_marginals[i] as f64 / n;
            let pj = t.col_marginals[j] as f64 / n;
            mi += pij * (pij / (pi * pj)).ln();
        }
    }
    // Roundoff can push the ratio a hair past 1.
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

/// Clustering accuracy: the best fraction of objects matched under an
/// injective map from predicted clusters to truth clusters, found by optimal
/// assignment on the zero-padded square contingency table.
pub fn clustering_accuracy(pred: &Labeling, truth: &Labeling) -> Result<f64> {
    let t = ContingencyTable::new(pred, truth)?;
    let side = t.counts.len().max(t.counts[0].len());
    let mut weights = vec![vec![0i64; side]; side];
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            weights[i][j] = c as i64;
        }
    }
    let matched = max_assignment(&weights);
    Ok(matched as f64 / t.n as f64)
}

/// Maximum-weight perfect matching on a square matrix (Hungarian algorithm
/// with potentials, O(side^3)). Returns the optimal total weight.
fn max_assignment(weights: &[Vec<i64>]) -> i64 {
    let side = weights.len();
    let max_w = weights
        .iter()
        .flat_map(|r| r.iter())
        .copied()
        .max()
        .unwrap_or(0);
    // Minimize cost = max_w - weight.
    let cost = |i: usize, j: usize| max_w - weights[i][j];

    const INF: i64 = i64::MAX / 4;
    // 1-indexed potentials over rows (u) and columns (v).
    let mut u = vec![0i64; side + 1];
    let mut v = vec![0i64; side + 1];
    let mut match_col = vec![0usize; side + 1]; // column -> row
    let mut way = vec![0usize; side + 1];

    for i in 1..=side {
        match_col[0] = i;
        let mut j0 = 0usize;
        let mut min_v = vec![INF; side + 1];
        let mut used = vec![false; side + 1];
        loop {
            used[j0] = true;
            let i0 = match_col[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=side {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < min_v[j] {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=side {
                if used[j] {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if match_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut total = 0i64;
    for j in 1..=side {
        if match_col[j] > 0 {
            total += weights[match_col[j] - 1][j - 1];
        }
    }
    total
}

/// Mean and sample standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Formats a percent-scale statistic as "95.86±0.48".
pub fn pm_percent(mean: f64, std: f64) -> String {
    format!("{:.2}±{:.2}", mean * 100.0, std * 100.0)
}

/// Aggregate over repeated runs against one ground truth.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub runs: usize,
    pub nmi_mean: f64,
    pub nmi_std: f64,
    pub ca_mean: f64,
    pub ca_std: f64,
    /// Per-phase (name, mean seconds, std seconds), in pipeline order.
    pub phases: Vec<(String, f64, f64)>,
    pub total_mean: f64,
    pub total_std: f64,
}

impl RunReport {
    pub fn nmi_pm(&self) -> String {
        pm_percent(self.nmi_mean, self.nmi_std)
    }

    pub fn ca_pm(&self) -> String {
        pm_percent(self.ca_mean, self.ca_std)
    }
}

/// Summarizes repeated clustering runs: mean and sample standard deviation of
/// NMI, CA, and per-phase wall times.
pub fn run_report(results: &[ClusteringResult], truth: &Labeling) -> Result<RunReport> {
    if results.is_empty() {
        return Err(Error::Value("run report needs at least one result".into()));
    }
    let mut nmis = Vec::with_capacity(results.len());
    let mut cas = Vec::with_capacity(results.len());
    for r in results {
        nmis.push(nmi(&r.labeling, truth)?);
        cas.push(clustering_accuracy(&r.labeling, truth)?);
    }
    let (nmi_mean, nmi_std) = mean_std(&nmis);
    let (ca_mean, ca_std) = mean_std(&cas);

    let phase_names: Vec<String> = results[0].timings.iter().map(|t| t.name.clone()).collect();
    let mut phases = Vec::with_capacity(phase_names.len());
    for name in &phase_names {
        let times: Vec<f64> = results
            .iter()
            .map(|r| r.phase_seconds(name).unwrap_or(0.0))
            .collect();
        let (m, s) = mean_std(&times);
        phases.push((name.clone(), m, s));
    }
    let totals: Vec<f64> = results.iter().map(|r| r.total_seconds()).collect();
    let (total_mean, total_std) = mean_std(&totals);

    Ok(RunReport {
        runs: results.len(),
        nmi_mean,
        nmi_std,
        ca_mean,
        ca_std,
        phases,
        total_mean,
        total_std,
    })
}
