//! Lloyd's k-means with k-means++ seeding and restarts.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Result, TopicError};
use crate::rng::stream_rng;

#[derive(Debug, Clone)]
pub struct KMeansOptions {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KMeansResult {
    /// `L x d`, one center per row.
    #[serde(skip)]
    pub centers: DMatrix<f64>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Row-major point set.
pub(crate) struct Points<'a> {
    pub data: &'a [f64],
    pub dim: usize,
}

impl Points<'_> {
    fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        out.extend(m.row(i).iter());
    }
    out
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Number of distinct rows (exact comparison).
pub fn count_distinct_rows(points: &DMatrix<f64>) -> usize {
    let mut rows: Vec<Vec<f64>> = points.row_iter().map(|r| r.iter().copied().collect()).collect();
    rows.sort_by(|a, b| lexicographic(a, b));
    rows.dedup();
    rows.len()
}

/// Clusters the rows of `points` into `l` groups. Runs `restarts` seeded
/// k-means++ initializations and keeps the lowest inertia (earliest restart
/// on ties).
///
/// Points are processed in lexicographic order of their coordinates, so the
/// clustering does not depend on the order of the input rows.
pub fn kmeans(points: &DMatrix<f64>, l: usize, opts: &KMeansOptions) -> Result<KMeansResult> {
    let p = points.nrows();
    if l == 0 || l > p {
        return Err(TopicError::InvalidArgument(format!(
            "k-means needs 1 <= l <= {p}, got l={l}"
        )));
    }
    let distinct = count_distinct_rows(points);
    if distinct < l {
        return Err(TopicError::TooFewDistinctPoints {
            needed: l,
            available: distinct,
        });
    }
    let dim = points.ncols();
    let unsorted = row_major(points);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        lexicographic(&unsorted[a * dim..(a + 1) * dim], &unsorted[b * dim..(b + 1) * dim])
    });
    let flat: Vec<f64> = order
        .iter()
        .flat_map(|&i| unsorted[i * dim..(i + 1) * dim].iter().copied())
        .collect();
    let pts = Points { data: &flat, dim };

    let mut best: Option<Lloyd> = None;
    for r in 0..opts.restarts.max(1) {
        let init = plus_plus_init(&pts, l, opts.seed, r as u64);
        let run = lloyd(&pts, init, l, opts.max_iter);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let centers = DMatrix::from_row_slice(l, pts.dim, &best.centers);
    let mut assignment = vec![0; p];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = best.labels[pos];
    }
    Ok(KMeansResult {
        centers,
        assignment,
        inertia: best.inertia,
        iterations: best.trace.len(),
        converged: best.converged,
    })
}

/// k-means++ seeding: first center uniform, the rest with probability
/// proportional to squared distance from the nearest chosen center.
pub(crate) fn plus_plus_init(pts: &Points<'_>, l: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let n = pts.len();
    let mut centers = Vec::with_capacity(l * pts.dim);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(pts.get(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(pts.get(i), pts.get(first))).collect();
    for _ in 1..l {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave target just above the final sum.
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        let c = pts.get(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(pts.get(i), &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

pub(crate) struct Lloyd {
    pub centers: Vec<f64>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub trace: Vec<f64>,
    pub converged: bool,
}

fn assign(pts: &Points<'_>, centers: &[f64], l: usize, labels: &mut [usize]) -> f64 {
    let dim = pts.dim;
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let x = pts.get(i);
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for c in 0..l {
            let d = sq_dist(x, &centers[c * dim..(c + 1) * dim]);
            if d < best {
                best = d;
                arg = c;
            }
        }
        *label = arg;
        inertia += best;
    }
    inertia
}

fn inertia_of(pts: &Points<'_>, centers: &[f64], labels: &[usize]) -> f64 {
    let dim = pts.dim;
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| sq_dist(pts.get(i), &centers[c * dim..(c + 1) * dim]))
        .sum()
}

/// Moves the point farthest from its center into each empty cluster.
/// Returns whether anything was repaired.
fn repair_empty(pts: &Points<'_>, centers: &[f64], l: usize, labels: &mut [usize]) -> bool {
    let dim = pts.dim;
    let mut sizes = vec![0usize; l];
    for &c in labels.iter() {
        sizes[c] += 1;
    }
    let mut repaired = false;
    for empty in 0..l {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &c) in labels.iter().enumerate() {
            if sizes[c] < 2 {
                continue;
            }
            let d = sq_dist(pts.get(i), &centers[c * dim..(c + 1) * dim]);
            if d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let i = far.expect("l <= number of points");
        sizes[labels[i]] -= 1;
        labels[i] = empty;
        sizes[empty] = 1;
        repaired = true;
    }
    repaired
}

fn update_centers(pts: &Points<'_>, labels: &[usize], l: usize) -> Vec<f64> {
    let dim = pts.dim;
    let mut sums = vec![0.0; l * dim];
    let mut sizes = vec![0usize; l];
    for (i, &c) in labels.iter().enumerate() {
        sizes[c] += 1;
        for (s, x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(pts.get(i)) {
            *s += x;
        }
    }
    for c in 0..l {
        let n = sizes[c].max(1) as f64;
        sums[c * dim..(c + 1) * dim].iter_mut().for_each(|s| *s /= n);
    }
    sums
}

pub(crate) fn lloyd(pts: &Points<'_>, init: Vec<f64>, l: usize, max_iter: usize) -> Lloyd {
    let n = pts.len();
    let mut centers = init;
    let mut labels = vec![0usize; n];
    let mut trace = vec![assign(pts, &centers, l, &mut labels)];
    let mut converged = false;
    for _ in 0..max_iter {
        let repaired = repair_empty(pts, &centers, l, &mut labels);
        centers = update_centers(pts, &labels, l);
        let mut next = labels.clone();
        trace.push(assign(pts, &centers, l, &mut next));
        let stable = next == labels && !repaired;
        labels = next;
        if stable {
            converged = true;
            break;
        }
    }
    if !converged {
        repair_empty(pts, &centers, l, &mut labels);
        centers = update_centers(pts, &labels, l);
    }
    let inertia = inertia_of(pts, &centers, &labels);
    Lloyd {
        centers,
        labels,
        inertia,
        trace,
        converged,
    }
}
