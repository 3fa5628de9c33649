//! Normalized SVD and entry-wise eigen-ratios.
//!
//! The corpus frequency matrix `D` is rescaled row-wise by `M^{-1/2}`, where
//! `M` holds the mean frequency of each word, and its top-`K` left singular
//! vectors are divided entry-wise by the leading one.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Result, TopicError};
use crate::rng::stream_rng;

/// Matrices with at most this many entries use the dense eigensolver path.
pub const DENSE_LIMIT: usize = 1_000_000;

/// Relative gap below which consecutive singular values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Residual bound `max_k ||B v_k - s_k u_k||` relative to the top singular value.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SvdMethod {
    /// Dense when `p * n <= DENSE_LIMIT`, randomized otherwise.
    #[default]
    Auto,
    Dense,
    Randomized,
}

#[derive(Debug, Clone)]
pub struct SvdOptions {
    pub method: SvdMethod,
    pub seed: u64,
    pub oversampling: usize,
    /// Power iterations always performed before the first convergence check.
    pub power_iterations: usize,
    /// Hard cap on power iterations for the randomized path.
    pub max_iterations: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            method: SvdMethod::Auto,
            seed: 0,
            oversampling: 10,
            power_iterations: 6,
            max_iterations: 200,
        }
    }
}

/// Top-`K` singular triplets of `M^{-1/2} D`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralDecomposition {
    /// `M(j, j)`: mean frequency of word `j`.
    #[serde(skip)]
    pub m_diag: DVector<f64>,
    /// Strictly decreasing.
    pub singular_values: Vec<f64>,
    /// `p x K`, orthonormal columns.
    #[serde(skip)]
    pub left_vectors: DMatrix<f64>,
    /// `n x K`, orthonormal columns.
    #[serde(skip)]
    pub right_vectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn k(&self) -> usize {
        self.singular_values.len()
    }

    pub fn xi1(&self) -> DVector<f64> {
        self.left_vectors.column(0).into_owned()
    }
}

/// Row means of the frequency matrix.
pub fn normalization_diag(freq: &DMatrix<f64>) -> DVector<f64> {
    let n = freq.ncols() as f64;
    DVector::from_iterator(
        freq.nrows(),
        freq.row_iter().map(|row| row.iter().sum::<f64>() / n),
    )
}

/// `M^{-1/2} D`.
pub fn scaled_matrix(freq: &DMatrix<f64>, m_diag: &DVector<f64>) -> Result<DMatrix<f64>> {
    if m_diag.len() != freq.nrows() {
        return Err(TopicError::DimensionMismatch(format!(
            "m_diag has {} entries for {} rows",
            m_diag.len(),
            freq.nrows()
        )));
    }
    let mut inv_sqrt = Vec::with_capacity(m_diag.len());
    for (j, &m) in m_diag.iter().enumerate() {
        if !(m > 0.0) {
            return Err(TopicError::NonPositiveNormalization { index: j, value: m });
        }
        inv_sqrt.push(1.0 / m.sqrt());
    }
    let mut b = freq.clone();
    for mut col in b.column_iter_mut() {
        for (x, s) in col.iter_mut().zip(&inv_sqrt) {
            *x *= s;
        }
    }
    Ok(b)
}

/// Top-`k` SVD of `diag(m_diag)^{-1/2} * freq`.
pub fn truncated_svd(
    freq: &DMatrix<f64>,
    m_diag: &DVector<f64>,
    k: usize,
    opts: &SvdOptions,
) -> Result<SpectralDecomposition> {
    let (p, n) = freq.shape();
    if k == 0 || k > p.min(n) {
        return Err(TopicError::InvalidK {
            k,
            reason: format!("must satisfy 1 <= k <= min(p, n) = {}", p.min(n)),
        });
    }
    let b = scaled_matrix(freq, m_diag)?;
    let dense = match opts.method {
        SvdMethod::Dense => true,
        SvdMethod::Randomized => false,
        SvdMethod::Auto => p * n <= DENSE_LIMIT,
    };
    let (mut sv, u, v) = if dense {
        dense_svd(&b, k)?
    } else {
        randomized_svd(&b, k, opts)?
    };

    check_gaps(&sv, k)?;
    sv.truncate(k);
    let mut u = u.columns(0, k).into_owned();
    let mut v = v.columns(0, k).into_owned();
    apply_sign_convention(&mut u, &mut v);

    let resid = max_residual(&b, &sv, &u, &v);
    if resid > RESIDUAL_TOLERANCE * sv[0] {
        return Err(TopicError::SvdNotConverged {
            iterations: 0,
            residual: resid,
        });
    }
    Ok(SpectralDecomposition {
        m_diag: m_diag.clone(),
        singular_values: sv,
        left_vectors: u,
        right_vectors: v,
    })
}

/// Checks consecutive gaps among the first `k + 1` values; a missing
/// `(k+1)`-th value counts as zero.
fn check_gaps(sv: &[f64], k: usize) -> Result<()> {
    let tol = TIE_TOLERANCE * sv[0];
    for i in 0..k {
        let next = sv.get(i + 1).copied().unwrap_or(0.0);
        let gap = sv[i] - next;
        if gap <= tol {
            return Err(TopicError::SingularValueTie {
                index: i + 1,
                next: i + 2,
                gap,
                tol,
            });
        }
    }
    Ok(())
}

/// Dense path via the eigendecomposition of the smaller Gram matrix.
/// Returns up to `k + 1` triplets so the caller can check the trailing gap.
fn dense_svd(b: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (p, n) = b.shape();
    let wide = p <= n;
    let gram = if wide { b * b.transpose() } else { b.tr_mul(b) };
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
    let keep = (k + 1).min(order.len());
    let basis = DMatrix::from_fn(eig.eigenvectors.nrows(), keep, |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    // Squaring loses the small singular values to rounding, so the final
    // triplets come from an SVD of B restricted to the eigenvector subspace.
    let projected = if wide { b.tr_mul(&basis) } else { b * &basis };
    let (sv, proj_vecs, rot) = sorted_thin_svd(projected)?;
    let rotated = basis * rot;
    Ok(if wide {
        (sv, rotated, proj_vecs)
    } else {
        (sv, proj_vecs, rotated)
    })
}

/// Thin SVD `C = U diag(s) W^T` with `s` in decreasing order; returns
/// `(s, U, W)`. Intended for matrices with few rows or few columns.
fn sorted_thin_svd(c: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    if c.nrows() < c.ncols() {
        let (sv, w, u) = jacobi_svd(c.transpose())?;
        return Ok((sv, u, w));
    }
    jacobi_svd(c)
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// One-sided Jacobi on the columns of a tall matrix.
fn jacobi_svd(mut a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (m, c) = a.shape();
    let mut w = DMatrix::<f64>::identity(c, c);
    let mut converged = c < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..c {
            for j in i + 1..c {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dot(&a.column(j));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_columns(&mut a, i, j, cs, sn);
                rotate_columns(&mut w, i, j, cs, sn);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(TopicError::SvdNotConverged {
            iterations: JACOBI_MAX_SWEEPS,
            residual: f64::NAN,
        });
    }
    let norms: Vec<f64> = (0..c).map(|i| a.column(i).norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let sv: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let floor = sv.first().copied().unwrap_or(0.0) * f64::EPSILON * m.max(c) as f64;
    let mut u = DMatrix::zeros(m, c);
    let mut filled = 0;
    for (dst, &src) in order.iter().enumerate() {
        if sv[dst] > floor {
            u.set_column(dst, &(a.column(src) / sv[dst]));
            filled += 1;
        }
    }
    complete_orthonormal(&mut u, filled);
    let w = DMatrix::from_fn(c, c, |r, col| w[(r, order[col])]);
    Ok((sv, u, w))
}

fn rotate_columns(m: &mut DMatrix<f64>, i: usize, j: usize, cs: f64, sn: f64) {
    for r in 0..m.nrows() {
        let x = m[(r, i)];
        let y = m[(r, j)];
        m[(r, i)] = cs * x - sn * y;
        m[(r, j)] = sn * x + cs * y;
    }
}

/// Fills columns `filled..` of `u` with unit vectors orthogonal to all
/// previous columns, drawn from the standard basis.
fn complete_orthonormal(u: &mut DMatrix<f64>, filled: usize) {
    let (m, c) = u.shape();
    let mut next = filled;
    let mut e = 0;
    while next < c && e < m {
        let mut cand = DVector::<f64>::zeros(m);
        cand[e] = 1.0;
        e += 1;
        for _ in 0..2 {
            for prev in 0..next {
                let proj = u.column(prev).dot(&cand);
                cand -= u.column(prev) * proj;
            }
        }
        let norm = cand.norm();
        if norm > 0.5 {
            u.set_column(next, &(cand / norm));
            next += 1;
        }
    }
}

fn randomized_svd(
    b: &DMatrix<f64>,
    k: usize,
    opts: &SvdOptions,
) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (p, n) = b.shape();
    let width = (k + opts.oversampling.max(1)).min(p.min(n));
    let mut rng = stream_rng(opts.seed, 0x5bd1_e995);
    let omega = DMatrix::from_fn(n, width, |_, _| StandardNormal.sample(&mut rng));
    let mut q = orthonormal_basis(b * omega);

    let power_step = |q: &DMatrix<f64>| orthonormal_basis(b * orthonormal_basis(b.tr_mul(q)));
    let mut iterations = 0;
    while iterations < opts.power_iterations {
        q = power_step(&q);
        iterations += 1;
    }
    loop {
        let (sv, u, v) = rayleigh_ritz(b, &q)?;
        let resid = max_residual(
            b,
            &sv[..k],
            &u.columns(0, k).into_owned(),
            &v.columns(0, k).into_owned(),
        );
        if resid <= RESIDUAL_TOLERANCE * sv[0] {
            return Ok((sv, u, v));
        }
        if iterations >= opts.max_iterations {
            return Err(TopicError::SvdNotConverged {
                iterations,
                residual: resid,
            });
        }
        q = power_step(&q);
        iterations += 1;
    }
}

/// Exact SVD of `B` restricted to `span(Q)`.
fn rayleigh_ritz(b: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (sv, uc, v) = sorted_thin_svd(q.tr_mul(b))?;
    Ok((sv, q * uc, v))
}

fn orthonormal_basis(m: DMatrix<f64>) -> DMatrix<f64> {
    m.qr().q()
}

fn max_residual(b: &DMatrix<f64>, sv: &[f64], u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let bv = b * v;
    let btu = b.tr_mul(u);
    let mut worst = 0.0f64;
    for (c, &s) in sv.iter().enumerate() {
        let r1 = (bv.column(c) - u.column(c) * s).norm();
        let r2 = (btu.column(c) - v.column(c) * s).norm();
        worst = worst.max(r1).max(r2);
    }
    worst
}

/// Fixes the sign of every singular pair: column 1 gets a positive entry sum,
/// the others a positive entry of largest magnitude (first such entry on ties).
pub fn apply_sign_convention(u: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    for c in 0..u.ncols() {
        let col = u.column(c);
        let sum: f64 = col.iter().sum();
        let flip = if c == 0 && sum != 0.0 {
            sum < 0.0
        } else {
            let mut best = 0.0f64;
            let mut best_val = 0.0f64;
            for &x in col.iter() {
                if x.abs() > best {
                    best = x.abs();
                    best_val = x;
                }
            }
            best_val < 0.0
        };
        if flip {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
}

/// Entry-wise ratios of singular vectors 2..K to the first, clamped to
/// `[-t, t]`.
#[derive(Debug, Clone, Serialize)]
pub struct RatioMatrix {
    /// `p x (K-1)`.
    #[serde(skip)]
    pub rows: DMatrix<f64>,
    #[serde(skip)]
    pub xi1: DVector<f64>,
    pub threshold: f64,
    /// Rows where the leading singular vector is exactly zero; set to zero.
    pub degenerate_rows: Vec<usize>,
}

pub fn ratio_matrix(sd: &SpectralDecomposition, t: f64) -> Result<RatioMatrix> {
    let k = sd.k();
    if k < 2 {
        return Err(TopicError::InvalidK {
            k,
            reason: "ratio matrix needs at least two singular vectors".into(),
        });
    }
    ratio_from_vectors(&sd.left_vectors, t)
}

/// Ratio matrix from an explicit `p x K` matrix of singular vectors.
pub fn ratio_from_vectors(xi: &DMatrix<f64>, t: f64) -> Result<RatioMatrix> {
    if t.is_nan() || t <= 0.0 {
        return Err(TopicError::InvalidArgument(format!(
            "threshold must be positive, got {t}"
        )));
    }
    let (p, k) = xi.shape();
    let mut rows = DMatrix::zeros(p, k - 1);
    let mut degenerate_rows = Vec::new();
    for j in 0..p {
        let lead = xi[(j, 0)];
        if lead == 0.0 {
            degenerate_rows.push(j);
            continue;
        }
        for c in 1..k {
            rows[(j, c - 1)] = (xi[(j, c)] / lead).clamp(-t, t);
        }
    }
    Ok(RatioMatrix {
        rows,
        xi1: xi.column(0).into_owned(),
        threshold: t,
        degenerate_rows,
    })
}
