//! Distance primitives shared by every module.

use crate::error::{Error, Result};

/// Squared Euclidean distance between two equal-dimension vectors.
///
/// Symmetric, non-negative, and zero iff `a == b`. The squared form is used
/// for all comparisons; callers take a square root only where a true distance
/// is needed (e.g. the kernel width).
pub fn sq_euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(sq_dist(a, b))
}

/// Unchecked hot-path variant; lengths must match.
#[inline(always)]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // The 2-d case dominates the benchmark datasets; keep it branch-free.
    if a.len() == 2 {
        let dx = a[0] - b[0];
        let dy = a[1] - b[1];
        return dx * dx + dy * dy;
    }
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Index of the nearest row of `rows` (a flat `count x dim` matrix) to `x`,
/// together with the squared distance. Ties break toward the lowest index.
#[inline]
pub(crate) fn nearest_row(x: &[f64], rows: &[f64], dim: usize) -> (usize, f64) {
    debug_assert!(!rows.is_empty());
    let mut best = f64::INFINITY;
    let mut best_idx = 0usize;
    for (j, c) in rows.chunks_exact(dim).enumerate() {
        let d = sq_dist(x, c);
        if d < best {
            best = d;
            best_idx = j;
        }
    }
    (best_idx, best)
}
