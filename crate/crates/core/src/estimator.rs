//! End-to-end topic estimation.
//!
//! frequencies -> normalization -> truncated SVD -> ratio matrix -> k-means
//! -> vertex hunting -> barycentric weights -> topic reconstruction.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::corpus::{frequencies, DocTermMatrix};
use crate::error::{Result, TopicError};
use crate::rng::derive_seed;
use crate::spectral::{
    normalization_diag, ratio_matrix, truncated_svd, RatioMatrix, SpectralDecomposition,
    SvdMethod, SvdOptions,
};
use crate::vertex_hunt::{
    affinely_independent, count_distinct_rows, hunt_vertices, kmeans, KMeansOptions,
    KMeansResult, VertexHuntResult,
};

/// Column l1 mass below which a reconstructed topic counts as degenerate.
pub const MIN_TOPIC_MASS: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Clamp for the ratio matrix; `f64::INFINITY` disables it.
    pub threshold: f64,
    /// Number of k-means clusters; `None` means `10 * K`.
    pub clusters: Option<usize>,
    pub seed: u64,
    pub kmeans_restarts: usize,
    pub kmeans_max_iter: usize,
    pub svd_method: SvdMethod,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            threshold: f64::INFINITY,
            clusters: None,
            seed: 0,
            kmeans_restarts: 10,
            kmeans_max_iter: 300,
            svd_method: SvdMethod::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TopicEstimate {
    /// `p x K`, columns sum to one.
    #[serde(skip)]
    pub a_hat: DMatrix<f64>,
    /// `p x K`, rows are barycentric weights (zero for `zero_rows`).
    #[serde(skip)]
    pub pi_hat: DMatrix<f64>,
    /// Computed on the `kept_rows` submatrix. `None` when `K = 1`.
    pub spectral: Option<SpectralDecomposition>,
    pub ratio: Option<RatioMatrix>,
    pub kmeans: Option<KMeansResult>,
    pub vh: Option<VertexHuntResult>,
    /// Words with zero total frequency; their rows of `a_hat` are zero.
    pub zero_rows: Vec<usize>,
    /// Words that entered the spectral stage, in order.
    pub kept_rows: Vec<usize>,
    /// Cluster count actually used by k-means.
    pub clusters_used: usize,
}

impl TopicEstimate {
    pub fn k(&self) -> usize {
        self.a_hat.ncols()
    }
}

/// Solves `[1^T; V^T] w = [1; r]` for many `r` with one factorization.
pub struct WeightSolver {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    k: usize,
}

impl WeightSolver {
    /// `vertices` is `K x (K-1)`, one vertex per row.
    pub fn new(vertices: &DMatrix<f64>) -> Result<Self> {
        let (k, dim) = vertices.shape();
        if k < 2 || dim != k - 1 {
            return Err(TopicError::DimensionMismatch(format!(
                "vertices must be K x (K-1), got {k} x {dim}"
            )));
        }
        let flat: Vec<f64> = (0..k).flat_map(|r| vertices.row(r).iter().copied().collect::<Vec<_>>()).collect();
        if !affinely_independent(&flat, k, dim) {
            return Err(TopicError::SingularVertexSystem);
        }
        let system = DMatrix::from_fn(k, k, |r, c| if r == 0 { 1.0 } else { vertices[(c, r - 1)] });
        let lu = system.lu();
        if !lu.is_invertible() {
            return Err(TopicError::SingularVertexSystem);
        }
        Ok(Self { lu, k })
    }

    /// Raw barycentric coordinates, before clamping.
    pub fn raw(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.k - 1 {
            return Err(TopicError::DimensionMismatch(format!(
                "point has dimension {}, expected {}",
                r.len(),
                self.k - 1
            )));
        }
        let mut rhs = DVector::zeros(self.k);
        rhs[0] = 1.0;
        rhs.rows_mut(1, self.k - 1).copy_from_slice(r);
        let sol = self.lu.solve(&rhs).ok_or(TopicError::SingularVertexSystem)?;
        Ok(sol.iter().copied().collect())
    }

    /// Clamped and renormalized weights.
    pub fn weights(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(regularize_weights(self.raw(r)?))
    }
}

/// Sets negative entries to zero and rescales to unit sum; an all-zero
/// result becomes the uniform vector.
pub fn regularize_weights(mut w: Vec<f64>) -> Vec<f64> {
    w.iter_mut().for_each(|x| *x = x.max(0.0));
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / w.len() as f64;
        w.iter_mut().for_each(|x| *x = u);
    }
    w
}

/// Barycentric weights of `r` with respect to `vertices`, regularized to the
/// probability simplex.
pub fn estimate_weights(r: &[f64], vertices: &DMatrix<f64>) -> Result<Vec<f64>> {
    WeightSolver::new(vertices)?.weights(r)
}

/// `A* = M^{1/2} diag(xi1) Pi`, negatives clamped to zero, columns scaled to
/// unit l1 norm.
pub fn reconstruct_topics(
    pi_hat: &DMatrix<f64>,
    m_diag: &DVector<f64>,
    xi1: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let (p, k) = pi_hat.shape();
    if m_diag.len() != p || xi1.len() != p {
        return Err(TopicError::DimensionMismatch(format!(
            "pi_hat has {p} rows, m_diag {} and xi1 {}",
            m_diag.len(),
            xi1.len()
        )));
    }
    let mut a = DMatrix::from_fn(p, k, |j, c| {
        let v = m_diag[j].max(0.0).sqrt() * xi1[j] * pi_hat[(j, c)];
        v.max(0.0)
    });
    for (c, mut col) in a.column_iter_mut().enumerate() {
        let mass: f64 = col.iter().sum();
        if !(mass >= MIN_TOPIC_MASS) {
            return Err(TopicError::DegenerateTopic(c));
        }
        col /= mass;
    }
    Ok(a)
}

/// Fits `k` topics to a count corpus.
pub fn fit(d: &DocTermMatrix, k: usize, opts: &FitOptions) -> Result<TopicEstimate> {
    fit_frequencies(&frequencies(d)?, k, opts)
}

/// Fits `k` topics to a `p x n` word-frequency matrix (columns are
/// documents). Rows with zero mean frequency are excluded from the spectral
/// stage and come back as zero rows of the estimate.
pub fn fit_frequencies(freq: &DMatrix<f64>, k: usize, opts: &FitOptions) -> Result<TopicEstimate> {
    let (p, n) = freq.shape();
    if k == 0 || k > p.min(n) {
        return Err(TopicError::InvalidK {
            k,
            reason: format!("must satisfy 1 <= k <= min(p, n) = {}", p.min(n)),
        });
    }
    if freq.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(TopicError::InvalidArgument(
            "frequencies must be finite and non-negative".into(),
        ));
    }
    let m_full = normalization_diag(freq);
    let kept_rows: Vec<usize> = (0..p).filter(|&j| m_full[j] > 0.0).collect();
    let zero_rows: Vec<usize> = (0..p).filter(|&j| !(m_full[j] > 0.0)).collect();
    if kept_rows.len() < k {
        return Err(TopicError::InvalidK {
            k,
            reason: format!("only {} words have nonzero frequency", kept_rows.len()),
        });
    }

    if k == 1 {
        let total: f64 = m_full.sum();
        let a_hat = DMatrix::from_fn(p, 1, |j, _| m_full[j] / total);
        let pi_hat = DMatrix::from_fn(p, 1, |j, _| if m_full[j] > 0.0 { 1.0 } else { 0.0 });
        return Ok(TopicEstimate {
            a_hat,
            pi_hat,
            spectral: None,
            ratio: None,
            kmeans: None,
            vh: None,
            zero_rows,
            kept_rows,
            clusters_used: 0,
        });
    }

    let reduced = if zero_rows.is_empty() {
        freq.clone()
    } else {
        freq.select_rows(kept_rows.iter())
    };
    let m_diag = DVector::from_iterator(kept_rows.len(), kept_rows.iter().map(|&j| m_full[j]));

    let svd_opts = SvdOptions {
        method: opts.svd_method,
        seed: derive_seed(opts.seed, 1),
        ..Default::default()
    };
    let spectral = truncated_svd(&reduced, &m_diag, k, &svd_opts)?;
    let ratio = ratio_matrix(&spectral, opts.threshold)?;

    let requested = opts.clusters.unwrap_or(10 * k);
    if requested < k {
        return Err(TopicError::InvalidArgument(format!(
            "number of clusters L={requested} must be at least K={k}"
        )));
    }
    let distinct = count_distinct_rows(&ratio.rows);
    let clusters_used = requested.min(distinct);
    if clusters_used < k {
        return Err(TopicError::TooFewDistinctPoints {
            needed: k,
            available: distinct,
        });
    }
    let km_opts = KMeansOptions {
        seed: derive_seed(opts.seed, 2),
        restarts: opts.kmeans_restarts,
        max_iter: opts.kmeans_max_iter,
    };
    let km = kmeans(&ratio.rows, clusters_used, &km_opts)?;
    let vh = hunt_vertices(&km.centers, k)?;

    let solver = WeightSolver::new(&vh.vertices)?;
    let mut pi_reduced = DMatrix::zeros(kept_rows.len(), k);
    let mut point = vec![0.0; k - 1];
    for j in 0..kept_rows.len() {
        for (c, x) in point.iter_mut().enumerate() {
            *x = ratio.rows[(j, c)];
        }
        let w = solver.weights(&point)?;
        pi_reduced.row_mut(j).copy_from_slice(&w);
    }
    let a_reduced = reconstruct_topics(&pi_reduced, &m_diag, &ratio.xi1)?;

    let mut a_hat = DMatrix::zeros(p, k);
    let mut pi_hat = DMatrix::zeros(p, k);
    for (r, &j) in kept_rows.iter().enumerate() {
        a_hat.row_mut(j).copy_from(&a_reduced.row(r));
        pi_hat.row_mut(j).copy_from(&pi_reduced.row(r));
    }
    Ok(TopicEstimate {
        a_hat,
        pi_hat,
        spectral: Some(spectral),
        ratio: Some(ratio),
        kmeans: Some(km),
        vh: Some(vh),
        zero_rows,
        kept_rows,
        clusters_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0])
    }

    #[test]
    fn barycentric_weights() {
        let w = estimate_weights(&[0.25, 0.25], &triangle()).unwrap();
        for (a, b) in w.iter().zip([0.5, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        for v in 0..3 {
            let r: Vec<f64> = triangle().row(v).iter().copied().collect();
            let w = estimate_weights(&r, &triangle()).unwrap();
            for (c, x) in w.iter().enumerate() {
                assert!((x - if c == v { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn clamp_and_renormalize() {
        assert_eq!(regularize_weights(vec![-0.2, 0.6, 0.6]), vec![0.0, 0.5, 0.5]);
        assert_eq!(regularize_weights(vec![-1.0, -2.0]), vec![0.5, 0.5]);
        // A point outside the triangle gets clamped weights.
        let w = estimate_weights(&[1.0, 1.0], &triangle()).unwrap();
        assert_eq!(w, vec![0.0, 0.5, 0.5]);
    }

    #[test]
    fn singular_vertex_system() {
        let v = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 1.0, 2.0, 2.0]);
        assert!(matches!(
            estimate_weights(&[0.1, 0.1], &v),
            Err(TopicError::SingularVertexSystem)
        ));
    }

    #[test]
    fn identity_reconstruction() {
        let k = 3;
        let a = reconstruct_topics(
            &DMatrix::identity(k, k),
            &DVector::from_element(k, 1.0),
            &DVector::from_element(k, 1.0),
        )
        .unwrap();
        assert_eq!(a, DMatrix::identity(k, k));
    }

    #[test]
    fn xi1_scale_is_absorbed() {
        let pi = DMatrix::from_row_slice(4, 2, &[0.7, 0.3, 0.1, 0.9, 0.5, 0.5, 1.0, 0.0]);
        let m = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        let xi = DVector::from_vec(vec![0.3, 0.5, 0.2, 0.6]);
        let a = reconstruct_topics(&pi, &m, &xi).unwrap();
        let b = reconstruct_topics(&pi, &m, &(&xi * 7.5)).unwrap();
        assert!((a - b).amax() < 1e-15);
    }

    #[test]
    fn negative_xi1_rows_are_clamped() {
        let pi = DMatrix::from_row_slice(3, 2, &[0.5, 0.5, 1.0, 0.0, 0.0, 1.0]);
        let m = DVector::from_element(3, 1.0);
        let xi = DVector::from_vec(vec![-0.5, 0.5, 0.5]);
        let a = reconstruct_topics(&pi, &m, &xi).unwrap();
        assert_eq!(a.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0]);
        let pi = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let xi = DVector::from_vec(vec![0.5, 0.5, -0.5]);
        assert!(matches!(reconstruct_topics(&pi, &m, &xi), Err(TopicError::DegenerateTopic(1))));
    }

    #[test]
    fn single_topic_is_normalized_mean() {
        let counts = DMatrix::from_row_slice(3, 2, &[1, 4, 2, 0, 0, 0]);
        let d = DocTermMatrix::from_dense(&counts).unwrap();
        let est = fit(&d, 1, &FitOptions::default()).unwrap();
        let m = normalization_diag(&frequencies(&d).unwrap());
        let expected = &m / m.sum();
        assert!((est.a_hat.column(0) - expected).amax() < 1e-15);
        assert_eq!(est.zero_rows, vec![2]);
        assert!(est.spectral.is_none());
    }

    #[test]
    fn invalid_k() {
        let counts = DMatrix::from_row_slice(2, 2, &[1, 2, 3, 4]);
        let d = DocTermMatrix::from_dense(&counts).unwrap();
        assert!(matches!(fit(&d, 0, &FitOptions::default()), Err(TopicError::InvalidK { .. })));
        assert!(matches!(fit(&d, 3, &FitOptions::default()), Err(TopicError::InvalidK { .. })));
    }

    #[test]
    fn too_few_clusters() {
        let counts = DMatrix::from_fn(6, 5, |j, i| ((j * 7 + i * 3) % 5 + 1) as u64);
        let d = DocTermMatrix::from_dense(&counts).unwrap();
        let opts = FitOptions {
            clusters: Some(1),
            ..Default::default()
        };
        assert!(matches!(fit(&d, 2, &opts), Err(TopicError::InvalidArgument(_))));
    }
}
