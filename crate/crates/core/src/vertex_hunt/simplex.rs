//! Euclidean distance from a point to a simplex.
//!
//! The distance is the value of the QP
//!
//! ```text
//! min_w || V^T w - b ||_2   subject to  w >= 0, sum(w) = 1
//! ```
//!
//! solved with a primal active-set method over the barycentric weights. Each
//! active-set step solves the equality-constrained subproblem on the free set
//! through its KKT system.

use nalgebra::DMatrix;

/// Distances at or below this value are reported as exactly zero.
pub const ZERO_DISTANCE: f64 = 1e-12;

/// Relative rank threshold for the affine-independence test.
pub const AFFINE_RANK_TOLERANCE: f64 = 1e-10;

/// Reusable projector onto one simplex. Holds the vertex Gram matrix and
/// scratch space so repeated queries do not allocate.
#[derive(Debug, Clone)]
pub struct SimplexProjector {
    k: usize,
    dim: usize,
    /// Row-major `k x dim`.
    vertices: Vec<f64>,
    /// Row-major `k x k`, `G = V V^T`.
    gram: Vec<f64>,
    scale: f64,
    weights: Vec<f64>,
    linear: Vec<f64>,
    grad: Vec<f64>,
    free: Vec<bool>,
    blocked: Vec<bool>,
    trial: Vec<f64>,
    kkt: Vec<f64>,
    rhs: Vec<f64>,
    members: Vec<usize>,
}

impl SimplexProjector {
    /// `vertices` is row-major `k x dim`.
    pub fn new(vertices: &[f64], k: usize, dim: usize) -> Self {
        assert_eq!(vertices.len(), k * dim, "vertex buffer has wrong length");
        let mut p = Self {
            k,
            dim,
            vertices: vertices.to_vec(),
            gram: vec![0.0; k * k],
            scale: 1.0,
            weights: vec![0.0; k],
            linear: vec![0.0; k],
            grad: vec![0.0; k],
            free: vec![false; k],
            blocked: vec![false; k],
            trial: vec![0.0; k],
            kkt: vec![0.0; (k + 1) * (k + 1)],
            rhs: vec![0.0; k + 1],
            members: Vec::with_capacity(k),
        };
        p.refresh_gram();
        p
    }

    pub fn from_matrix(vertices: &DMatrix<f64>) -> Self {
        let (k, dim) = vertices.shape();
        let flat: Vec<f64> = (0..k)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .map(|(r, c)| vertices[(r, c)])
            .collect();
        Self::new(&flat, k, dim)
    }

    /// Replaces the vertex set, keeping the allocation.
    pub fn reset(&mut self, vertices: &[f64]) {
        self.vertices.copy_from_slice(vertices);
        self.refresh_gram();
    }

    fn refresh_gram(&mut self) {
        let (k, dim) = (self.k, self.dim);
        let mut scale = 0.0f64;
        for a in 0..k {
            for b in a..k {
                let va = &self.vertices[a * dim..(a + 1) * dim];
                let vb = &self.vertices[b * dim..(b + 1) * dim];
                let g: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                self.gram[a * k + b] = g;
                self.gram[b * k + a] = g;
            }
            scale = scale.max(self.gram[a * k + a]);
        }
        self.scale = scale.max(1.0);
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i * self.dim..(i + 1) * self.dim]
    }

    /// Distance from `b` to the simplex; exactly zero below [`ZERO_DISTANCE`].
    pub fn distance(&mut self, b: &[f64]) -> f64 {
        self.solve(b);
        self.residual_norm(b)
    }

    /// Barycentric weights of the closest point of the simplex to `b`.
    pub fn project(&mut self, b: &[f64]) -> (Vec<f64>, f64) {
        self.solve(b);
        let d = self.residual_norm(b);
        (self.weights.clone(), d)
    }

    fn residual_norm(&self, b: &[f64]) -> f64 {
        let mut sq = 0.0;
        for c in 0..self.dim {
            let mut x = -b[c];
            for v in 0..self.k {
                x += self.weights[v] * self.vertices[v * self.dim + c];
            }
            sq += x * x;
        }
        let d = sq.sqrt();
        if d <= ZERO_DISTANCE {
            0.0
        } else {
            d
        }
    }

    fn solve(&mut self, b: &[f64]) {
        assert_eq!(b.len(), self.dim, "point has wrong dimension");
        let k = self.k;
        let dim = self.dim;
        for v in 0..k {
            let row = &self.vertices[v * dim..(v + 1) * dim];
            self.linear[v] = row.iter().zip(b).map(|(x, y)| x * y).sum();
        }

        // Start from the closest vertex (lowest index on ties).
        let mut start = 0;
        let mut best = f64::INFINITY;
        for v in 0..k {
            let d2: f64 = self
                .vertex(v)
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            if d2 < best {
                best = d2;
                start = v;
            }
        }
        self.weights.iter_mut().for_each(|w| *w = 0.0);
        self.free.iter_mut().for_each(|f| *f = false);
        self.blocked.iter_mut().for_each(|f| *f = false);
        self.weights[start] = 1.0;
        self.free[start] = true;
        if k == 1 {
            return;
        }

        let tol = 1e-12 * self.scale;
        let max_iter = 100 * k;
        let mut iter = 0;
        while iter < max_iter {
            iter += 1;
            self.gradient();
            let nu: f64 = (0..k)
                .filter(|&v| self.free[v])
                .map(|v| self.weights[v] * self.grad[v])
                .sum();
            let mut enter = None;
            let mut most_negative = -tol;
            for v in 0..k {
                if self.free[v] || self.blocked[v] {
                    continue;
                }
                let reduced = self.grad[v] - nu;
                if reduced < most_negative {
                    most_negative = reduced;
                    enter = Some(v);
                }
            }
            let Some(enter) = enter else { break };
            self.free[enter] = true;

            loop {
                iter += 1;
                if !self.solve_subproblem() {
                    // The entering vertex makes the free set affinely
                    // dependent; exclude it for this query.
                    self.free[enter] = false;
                    self.weights[enter] = 0.0;
                    self.blocked[enter] = true;
                    break;
                }
                let all_positive = (0..k).all(|v| !self.free[v] || self.trial[v] > 0.0);
                if all_positive {
                    for v in 0..k {
                        self.weights[v] = if self.free[v] { self.trial[v] } else { 0.0 };
                    }
                    break;
                }
                // Step from the current weights toward the trial point until
                // the first free weight hits zero; that weight leaves the set.
                let mut alpha = 1.0f64;
                let mut blocking = None;
                for v in 0..k {
                    if self.free[v] && self.trial[v] <= 0.0 {
                        let denom = self.weights[v] - self.trial[v];
                        let a = if denom > 0.0 { self.weights[v] / denom } else { 0.0 };
                        if blocking.is_none() || a < alpha {
                            alpha = a;
                            blocking = Some(v);
                        }
                    }
                }
                for v in 0..k {
                    if !self.free[v] {
                        continue;
                    }
                    let w = self.weights[v] + alpha * (self.trial[v] - self.weights[v]);
                    if Some(v) == blocking || w <= 0.0 {
                        self.weights[v] = 0.0;
                        self.free[v] = false;
                    } else {
                        self.weights[v] = w;
                    }
                }
                if self.free.iter().all(|f| !f) {
                    // Cannot happen for a consistent step; fall back to the
                    // starting vertex.
                    self.weights[start] = 1.0;
                    self.free[start] = true;
                    break;
                }
                if !self.free[enter] {
                    // Entering vertex was rejected immediately: stop trying it.
                    self.blocked[enter] = true;
                }
                if iter >= max_iter {
                    break;
                }
            }
            // Renormalize against drift.
            let s: f64 = self.weights.iter().sum();
            if s > 0.0 {
                self.weights.iter_mut().for_each(|w| *w /= s);
            }
        }
    }

    fn gradient(&mut self) {
        let k = self.k;
        for a in 0..k {
            let mut g = -self.linear[a];
            for b in 0..k {
                g += self.gram[a * k + b] * self.weights[b];
            }
            self.grad[a] = g;
        }
    }

    /// Solves `min 1/2 z^T G z - c^T z` with `sum(z) = 1` on the free set,
    /// writing `trial`. Returns false if the KKT matrix is singular.
    fn solve_subproblem(&mut self) -> bool {
        let k = self.k;
        self.members.clear();
        self.members.extend((0..k).filter(|&v| self.free[v]));
        let m = self.members.len();
        let size = m + 1;
        for (r, &a) in self.members.iter().enumerate() {
            for (c, &b) in self.members.iter().enumerate() {
                self.kkt[r * size + c] = self.gram[a * k + b];
            }
            self.kkt[r * size + m] = 1.0;
            self.kkt[m * size + r] = 1.0;
            self.rhs[r] = self.linear[a];
        }
        self.kkt[m * size + m] = 0.0;
        self.rhs[m] = 1.0;

        if !gauss_solve(&mut self.kkt[..size * size], &mut self.rhs[..size], size, self.scale) {
            return false;
        }
        self.trial.iter_mut().for_each(|t| *t = 0.0);
        for (r, &a) in self.members.iter().enumerate() {
            self.trial[a] = self.rhs[r];
        }
        true
    }
}

/// In-place Gaussian elimination with partial pivoting. The solution
/// overwrites `rhs`.
fn gauss_solve(a: &mut [f64], rhs: &mut [f64], n: usize, scale: f64) -> bool {
    let eps = 1e-13 * scale.max(1.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for r in col + 1..n {
            let v = a[r * n + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= eps {
            return false;
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            rhs.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    for col in (0..n).rev() {
        let mut x = rhs[col];
        for c in col + 1..n {
            x -= a[col * n + c] * rhs[c];
        }
        rhs[col] = x / a[col * n + col];
    }
    true
}

/// Distance from `b` to the simplex spanned by the rows of `vertices`
/// (`K x (K-1)`). Zero when `b` lies inside.
pub fn distance_to_simplex(b: &[f64], vertices: &DMatrix<f64>) -> f64 {
    SimplexProjector::from_matrix(vertices).distance(b)
}

/// Rank test on `[v_2 - v_1, ..., v_K - v_1]` using a column-pivoted
/// Gram-Schmidt QR: every pivot must exceed `1e-10` times the largest
/// column norm. `vertices` is row-major `k x dim`.
pub fn affinely_independent(vertices: &[f64], k: usize, dim: usize) -> bool {
    if k <= 1 {
        return true;
    }
    if k - 1 > dim {
        return false;
    }
    let m = k - 1;
    let mut cols: Vec<f64> = Vec::with_capacity(m * dim);
    for v in 1..k {
        for c in 0..dim {
            cols.push(vertices[v * dim + c] - vertices[c]);
        }
    }
    affine_rank_full(&mut cols, m, dim)
}

fn affine_rank_full(cols: &mut [f64], m: usize, dim: usize) -> bool {
    let norm = |c: &[f64]| c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let max_norm = (0..m)
        .map(|i| norm(&cols[i * dim..(i + 1) * dim]))
        .fold(0.0f64, f64::max);
    if max_norm == 0.0 {
        return false;
    }
    let threshold = AFFINE_RANK_TOLERANCE * max_norm;
    let mut order: Vec<usize> = (0..m).collect();
    for step in 0..m {
        // Pivot: remaining column with the largest residual norm.
        let (pos, piv_norm) = (step..m)
            .map(|s| (s, norm(&cols[order[s] * dim..(order[s] + 1) * dim])))
            .fold((step, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if piv_norm <= threshold {
            return false;
        }
        order.swap(step, pos);
        let q_idx = order[step];
        let q: Vec<f64> = cols[q_idx * dim..(q_idx + 1) * dim]
            .iter()
            .map(|x| x / piv_norm)
            .collect();
        for &o in &order[step + 1..] {
            let col = &mut cols[o * dim..(o + 1) * dim];
            for _ in 0..2 {
                let dot: f64 = col.iter().zip(&q).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(&q).for_each(|(a, b)| *a -= dot * b);
            }
        }
    }
    true
}
