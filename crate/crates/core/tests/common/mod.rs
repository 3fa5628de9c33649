//! Reference implementations used as test oracles. Each one is written
//! independently of the library and favors simplicity over speed.
#![allow(dead_code)]

use topic_score::rng::stream_rng;
use topic_score::DMatrix;

use rand::Rng;

/// Random matrix with iid Uniform(0, 1) entries.
pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, 77);
    DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

pub fn column_stochastic(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut m = uniform_matrix(rows, cols, seed);
    for mut c in m.column_iter_mut() {
        let s = c.sum();
        c /= s;
    }
    m
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns eigenvalues and eigenvectors (columns), unsorted.
pub fn jacobi_eigen(mut a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-34 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)] == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Top-`k` singular values and left singular vectors of `b`, from the
/// eigendecomposition of the augmented matrix `[[0, B], [B^T, 0]]`, whose
/// eigenvalues are `+/- sigma`. No Gram matrix is formed.
pub fn reference_svd(b: &DMatrix<f64>, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let (p, n) = b.shape();
    let mut aug = DMatrix::zeros(p + n, p + n);
    aug.view_mut((0, p), (p, n)).copy_from(b);
    aug.view_mut((p, 0), (n, p)).copy_from(&b.transpose());
    let (vals, vecs) = jacobi_eigen(aug);
    let mut order: Vec<usize> = (0..p + n).collect();
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
    let sv = order[..k].iter().map(|&i| vals[i]).collect();
    // Eigenvector (u; v) / sqrt(2) for eigenvalue sigma.
    let u = DMatrix::from_fn(p, k, |r, c| vecs[(r, order[c])] * std::f64::consts::SQRT_2);
    (sv, u)
}

/// Largest principal angle (radians) between the column spaces of two
/// matrices with orthonormal columns.
pub fn max_principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let m = u.tr_mul(v);
    let (vals, _) = jacobi_eigen(m.tr_mul(&m));
    let smallest = vals.iter().copied().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    // sin^2 of the angle is 1 - cos^2; use it for accuracy at tiny angles.
    (1.0 - smallest).max(0.0).sqrt().asin()
}

/// Distance from `b` to the simplex spanned by the rows of `vertices`,
/// by a barycentric grid search (`step`) refined by repeated zooming.
pub fn grid_simplex_distance(b: &[f64], vertices: &DMatrix<f64>, step: f64) -> f64 {
    let k = vertices.nrows();
    let dim = b.len();
    // Offsets of every vertex from the last one; a point is
    // v_last + sum_{i<k-1} w_i (v_i - v_last).
    let base: Vec<f64> = (0..dim).map(|c| vertices[(k - 1, c)] - b[c]).collect();
    let edges: Vec<Vec<f64>> = (0..k - 1)
        .map(|i| (0..dim).map(|c| vertices[(i, c)] - vertices[(k - 1, c)]).collect())
        .collect();
    let sq = |w: &[f64]| -> f64 {
        let mut total = 0.0;
        for c in 0..dim {
            let mut x = base[c];
            for i in 0..k - 1 {
                x += w[i] * edges[i][c];
            }
            total += x * x;
        }
        total
    };
    let steps = (1.0 / step).round() as usize;
    let free = k - 1;
    let last = free - 1;
    let e = &edges[last];
    let ee: f64 = e.iter().map(|x| x * x).sum();
    let mut best = f64::INFINITY;
    let mut best_w = vec![0.0; free];
    // Odometer over all but the last free coordinate. The distance is a
    // convex quadratic in the last one, so its grid minimum sits on the
    // floor or ceiling of the continuous minimizer.
    let mut counts = vec![0usize; last];
    let mut w = vec![0.0; free];
    let mut r = vec![0.0; dim];
    'outer: loop {
        let used: usize = counts.iter().sum();
        let room = steps - used;
        for i in 0..last {
            w[i] = counts[i] as f64 / steps as f64;
        }
        for c in 0..dim {
            let mut x = base[c];
            for i in 0..last {
                x += w[i] * edges[i][c];
            }
            r[c] = x;
        }
        let t_star = if ee > 0.0 {
            -r.iter().zip(e).map(|(x, y)| x * y).sum::<f64>() / ee * steps as f64
        } else {
            0.0
        };
        let lo = t_star.floor().clamp(0.0, room as f64) as usize;
        let hi = t_star.ceil().clamp(0.0, room as f64) as usize;
        for m in [lo, hi] {
            w[last] = m as f64 / steps as f64;
            let d = sq(&w);
            if d < best {
                best = d;
                best_w.copy_from_slice(&w);
            }
        }
        let mut i = 0;
        loop {
            if i == last {
                break 'outer;
            }
            counts[i] += 1;
            if counts.iter().sum::<usize>() <= steps {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
    // Zoom: move weight between pairs of coordinates with a shrinking step.
    let mut full: Vec<f64> = best_w.clone();
    full.push(1.0 - best_w.iter().sum::<f64>());
    let mut h = step;
    while h > 1e-13 {
        let mut improved = true;
        while improved {
            improved = false;
            for from in 0..k {
                for to in 0..k {
                    let amount = h.min(full[from]);
                    if from == to || amount <= 0.0 {
                        continue;
                    }
                    let mut trial = full.clone();
                    trial[from] -= amount;
                    trial[to] += amount;
                    let d = sq(&trial[..k - 1]);
                    if d < best {
                        best = d;
                        full = trial;
                        improved = true;
                    }
                }
            }
        }
        h /= 2.0;
    }
    best.sqrt()
}

/// Every `k`-subset of `0..l` in lexicographic order.
pub fn subsets(l: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, l: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..l {
            cur.push(i);
            rec(i + 1, l, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, l, k, &mut Vec::new(), &mut out);
    out
}

/// All permutations of `0..k` (order irrelevant).
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Minimum over all column matchings of the summed l1 column distances,
/// accumulated in true-column order.
pub fn brute_force_loss(a_hat: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let k = a.ncols();
    let l1 = |r: usize, c: usize| -> f64 {
        a_hat.column(r).iter().zip(a.column(c).iter()).map(|(x, y)| (x - y).abs()).sum()
    };
    permutations(k)
        .into_iter()
        .map(|perm| {
            let mut inverse = vec![0; k];
            for (r, &c) in perm.iter().enumerate() {
                inverse[c] = r;
            }
            (0..k).map(|c| l1(inverse[c], c)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Brute-force vertex hunt: evaluates every subset with the grid distance;
/// returns `(best residual, best subset)` over subsets whose simplex has
/// nonzero volume.
pub fn brute_force_hunt(centers: &DMatrix<f64>, k: usize) -> (f64, Vec<usize>) {
    let l = centers.nrows();
    let dim = centers.ncols();
    let mut best = (f64::INFINITY, Vec::new());
    for subset in subsets(l, k) {
        let verts = DMatrix::from_fn(k, dim, |r, c| centers[(subset[r], c)]);
        let edges = DMatrix::from_fn(dim, k - 1, |r, c| verts[(c + 1, r)] - verts[(0, r)]);
        if edges.determinant().abs() < 1e-10 {
            continue;
        }
        let worst = (0..l)
            .map(|j| {
                let b: Vec<f64> = centers.row(j).iter().copied().collect();
                grid_simplex_distance(&b, &verts, 0.05)
            })
            .fold(0.0, f64::max);
        if worst < best.0 - 1e-9 {
            best = (worst, subset);
        }
    }
    best
}

/// Sum of squared distances of points to their assigned centers.
pub fn inertia(points: &DMatrix<f64>, centers: &DMatrix<f64>, assignment: &[usize]) -> f64 {
    (0..points.nrows())
        .map(|i| (points.row(i) - centers.row(assignment[i])).norm_squared())
        .sum()
}

/// Plain Lloyd iterations from `restarts` random initial centers sampled
/// from the data, keeping the lowest inertia.
pub fn reference_kmeans(points: &DMatrix<f64>, l: usize, restarts: usize, seed: u64) -> f64 {
    let p = points.nrows();
    let mut best = f64::INFINITY;
    for r in 0..restarts {
        let mut rng = stream_rng(seed, r as u64);
        let picks = rand::seq::index::sample(&mut rng, p, l).into_vec();
        let mut centers = DMatrix::from_fn(l, points.ncols(), |i, c| points[(picks[i], c)]);
        let mut assign = vec![0usize; p];
        for _ in 0..500 {
            for i in 0..p {
                let mut bi = 0;
                let mut bd = f64::INFINITY;
                for c in 0..l {
                    let d = (points.row(i) - centers.row(c)).norm_squared();
                    if d < bd {
                        bd = d;
                        bi = c;
                    }
                }
                assign[i] = bi;
            }
            let mut next = DMatrix::zeros(l, points.ncols());
            let mut counts = vec![0usize; l];
            for i in 0..p {
                counts[assign[i]] += 1;
                let row = points.row(i).clone_owned();
                let mut target = next.row_mut(assign[i]);
                target += row;
            }
            for c in 0..l {
                if counts[c] == 0 {
                    next.set_row(c, &centers.row(c));
                } else {
                    let mut row = next.row_mut(c);
                    row /= counts[c] as f64;
                }
            }
            if next == centers {
                break;
            }
            centers = next;
        }
        best = best.min(inertia(points, &centers, &assign));
    }
    best
}
