//! Permutation-minimized l1 loss between topic matrices.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Result, TopicError};

/// Largest `K` for which the loss enumerates all permutations.
pub const BRUTE_FORCE_MAX_K: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignmentSolver {
    /// Brute force up to [`BRUTE_FORCE_MAX_K`], Hungarian above.
    #[default]
    Auto,
    BruteForce,
    Hungarian,
}

#[derive(Debug, Clone, Serialize)]
pub struct LossReport {
    pub loss: f64,
    /// Estimated column `k` is matched to true column `permutation[k]`.
    pub permutation: Vec<usize>,
    pub per_topic: Vec<f64>,
    /// `||T a_hat_j - a_j||_1 / ||a_j||_1`; `None` for words with zero true mass.
    pub per_word_rel: Vec<Option<f64>>,
    /// False if either input has a column that does not sum to one (within 1e-6).
    pub columns_stochastic: bool,
}

/// `C(k, l) = ||a_hat_k - a_l||_1`.
pub fn cost_matrix(a_hat: &DMatrix<f64>, a_true: &DMatrix<f64>) -> DMatrix<f64> {
    let k = a_hat.ncols();
    DMatrix::from_fn(k, k, |r, c| {
        a_hat
            .column(r)
            .iter()
            .zip(a_true.column(c).iter())
            .map(|(x, y)| (x - y).abs())
            .sum()
    })
}

pub fn l1_loss(a_hat: &DMatrix<f64>, a_true: &DMatrix<f64>) -> Result<LossReport> {
    l1_loss_with(a_hat, a_true, AssignmentSolver::Auto)
}

pub fn l1_loss_with(
    a_hat: &DMatrix<f64>,
    a_true: &DMatrix<f64>,
    solver: AssignmentSolver,
) -> Result<LossReport> {
    if a_hat.shape() != a_true.shape() {
        return Err(TopicError::DimensionMismatch(format!(
            "estimate is {:?}, truth is {:?}",
            a_hat.shape(),
            a_true.shape()
        )));
    }
    let k = a_hat.ncols();
    let cost = cost_matrix(a_hat, a_true);
    let permutation = match solver {
        AssignmentSolver::BruteForce => brute_force_assignment(&cost),
        AssignmentSolver::Hungarian => min_cost_assignment(&cost),
        AssignmentSolver::Auto if k <= BRUTE_FORCE_MAX_K => brute_force_assignment(&cost),
        AssignmentSolver::Auto => min_cost_assignment(&cost),
    };
    let per_topic: Vec<f64> = (0..k).map(|r| cost[(r, permutation[r])]).collect();
    // Summed in the order of the true columns, so reordering the estimated
    // columns leaves the loss bit-identical.
    let mut by_truth = vec![0.0; k];
    for (r, &c) in permutation.iter().enumerate() {
        by_truth[c] = per_topic[r];
    }
    let loss = by_truth.iter().sum();

    let per_word_rel = (0..a_true.nrows())
        .map(|j| {
            let mass: f64 = a_true.row(j).iter().sum();
            (mass > 0.0).then(|| {
                (0..k)
                    .map(|r| (a_hat[(j, r)] - a_true[(j, permutation[r])]).abs())
                    .sum::<f64>()
                    / mass
            })
        })
        .collect();
    let stochastic = |m: &DMatrix<f64>| m.column_iter().all(|c| (c.sum() - 1.0).abs() <= 1e-6);
    Ok(LossReport {
        loss,
        permutation,
        per_topic,
        per_word_rel,
        columns_stochastic: stochastic(a_hat) && stochastic(a_true),
    })
}

/// Assignment cost `sum_k cost[(k, perm[k])]`, summed in row order.
pub fn assignment_cost(cost: &DMatrix<f64>, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(r, &c)| cost[(r, c)]).sum()
}

/// Minimum-cost permutation by enumeration in lexicographic order; the
/// first minimizer wins ties.
pub fn brute_force_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let k = cost.nrows();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = perm.clone();
    let mut best_cost = assignment_cost(cost, &perm);
    while next_permutation(&mut perm) {
        let c = assignment_cost(cost, &perm);
        if c < best_cost {
            best_cost = c;
            best.copy_from_slice(&perm);
        }
    }
    best
}

fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Hungarian method (shortest augmenting paths with potentials), `O(K^3)`.
/// Returns `perm` with row `r` assigned to column `perm[r]`.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    // 1-based arrays with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let cur = cost[(r0 - 1, col - 1)] - u[r0] - v[col];
                if cur < minv[col] {
                    minv[col] = cur;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for col in 1..=n {
        perm[owner[col] - 1] = col - 1;
    }
    perm
}
