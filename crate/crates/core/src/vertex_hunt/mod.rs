//! Two-stage vertex hunting: cluster the ratio-matrix rows with k-means,
//! then pick the `K` cluster centers whose simplex best covers all centers.

mod kmeans;
mod simplex;

pub use kmeans::{count_distinct_rows, kmeans, KMeansOptions, KMeansResult};
pub use simplex::{
    affinely_independent, distance_to_simplex, SimplexProjector, AFFINE_RANK_TOLERANCE,
    ZERO_DISTANCE,
};

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, TopicError};
use kmeans::row_major;

#[derive(Debug, Clone, Serialize)]
pub struct VertexHuntResult {
    /// `K x (K-1)`, one vertex per row.
    #[serde(skip)]
    pub vertices: DMatrix<f64>,
    /// Indices of the chosen centers, strictly increasing. Empty when the
    /// canonical fallback simplex was used.
    pub selected_indices: Vec<usize>,
    /// Largest center-to-simplex distance for the chosen vertices.
    pub max_residual: f64,
    pub fallback_used: bool,
}

/// Canonical simplex in `R^{K-1}`: the origin and the standard basis.
pub fn canonical_simplex(k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(k, k - 1, |r, c| if r == c + 1 { 1.0 } else { 0.0 })
}

/// Exhaustive search over all `C(L, K)` subsets of `centers` (rows).
///
/// Returns the affinely independent subset minimizing the maximum distance
/// of every center to its simplex. Ties go to the lexicographically smallest
/// index tuple. When no subset is affinely independent the canonical simplex
/// is returned with `fallback_used = true`.
pub fn hunt_vertices(centers: &DMatrix<f64>, k: usize) -> Result<VertexHuntResult> {
    let (l, dim) = centers.shape();
    if k < 2 {
        return Err(TopicError::InvalidK {
            k,
            reason: "vertex hunting needs at least two vertices".into(),
        });
    }
    if dim != k - 1 {
        return Err(TopicError::DimensionMismatch(format!(
            "centers have dimension {dim}, expected {}",
            k - 1
        )));
    }
    if l < k {
        return Err(TopicError::InvalidArgument(format!(
            "need at least K={k} centers, got {l}"
        )));
    }
    let flat = row_major(centers);

    // Upper bound on the best residual seen by any worker, as f64 bits
    // (order-preserving for non-negative values). Only used for pruning.
    let incumbent = AtomicU64::new(f64::INFINITY.to_bits());
    let best = (0..=l - k)
        .into_par_iter()
        .filter_map(|first| search_from(&flat, l, k, first, &incumbent))
        .reduce_with(|a, b| if better(&b, &a) { b } else { a });

    Ok(match best {
        Some(found) => {
            let vertices = DMatrix::from_fn(k, dim, |r, c| centers[(found.indices[r], c)]);
            VertexHuntResult {
                vertices,
                selected_indices: found.indices,
                max_residual: found.residual,
                fallback_used: false,
            }
        }
        None => {
            let vertices = canonical_simplex(k);
            let mut proj = SimplexProjector::from_matrix(&vertices);
            let max_residual = (0..l)
                .map(|j| proj.distance(&flat[j * dim..(j + 1) * dim]))
                .fold(0.0, f64::max);
            VertexHuntResult {
                vertices,
                selected_indices: Vec::new(),
                max_residual,
                fallback_used: true,
            }
        }
    })
}

#[derive(Debug, Clone)]
struct Candidate {
    residual: f64,
    indices: Vec<usize>,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.residual < b.residual || (a.residual == b.residual && a.indices < b.indices)
}

/// Evaluates every subset whose smallest index is `first`, in lexicographic
/// order.
fn search_from(
    flat: &[f64],
    l: usize,
    k: usize,
    first: usize,
    incumbent: &AtomicU64,
) -> Option<Candidate> {
    let dim = k - 1;
    let mut idx: Vec<usize> = (first..first + k).collect();
    let mut verts = vec![0.0; k * dim];
    let mut proj = SimplexProjector::new(&verts, k, dim);
    let mut in_subset = vec![false; l];
    let mut best: Option<Candidate> = None;
    // Center that most recently rejected a subset; tried first next time.
    let mut killer = 0usize;

    loop {
        for (r, &i) in idx.iter().enumerate() {
            verts[r * dim..(r + 1) * dim].copy_from_slice(&flat[i * dim..(i + 1) * dim]);
        }
        if affinely_independent(&verts, k, dim) {
            proj.reset(&verts);
            idx.iter().for_each(|&i| in_subset[i] = true);
            let bound = f64::from_bits(incumbent.load(Ordering::Relaxed));
            let mut worst = 0.0f64;
            let mut pruned = false;
            for j in std::iter::once(killer).chain((0..l).filter(|&j| j != killer)) {
                if in_subset[j] {
                    continue;
                }
                let d = proj.distance(&flat[j * dim..(j + 1) * dim]);
                worst = worst.max(d);
                if worst > bound {
                    killer = j;
                    pruned = true;
                    break;
                }
            }
            idx.iter().for_each(|&i| in_subset[i] = false);
            if !pruned {
                let cand = Candidate {
                    residual: worst,
                    indices: idx.clone(),
                };
                if best.as_ref().is_none_or(|b| better(&cand, b)) {
                    incumbent.fetch_min(worst.to_bits(), Ordering::Relaxed);
                    best = Some(cand);
                }
            }
        }
        if !next_combination(&mut idx[1..], l) {
            break;
        }
    }
    best
}

/// Advances the strictly increasing tuple `tail` (with values `< l`) to its
/// lexicographic successor.
fn next_combination(tail: &mut [usize], l: usize) -> bool {
    let m = tail.len();
    if m == 0 {
        return false;
    }
    let mut i = m;
    while i > 0 {
        i -= 1;
        if tail[i] < l - (m - i) {
            tail[i] += 1;
            for j in i + 1..m {
                tail[j] = tail[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
