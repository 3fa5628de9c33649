use nalgebra::DMatrix;
use rand::distr::{Distribution, Open01};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TopicError};
use crate::rng::stream_rng;

/// Exponent of the Zipf-like frequency decay.
pub const ZIPF_EXPONENT: f64 = 1.07;

/// Ground-truth topic model: `A` is `p x K`, `W` is `K x n`, both
/// column-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub a: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

impl TopicModel {
    pub fn new(a: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let model = Self { a, w };
        model.validate(1e-12)?;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.a.ncols()
    }

    /// Expected frequency matrix `D0 = A W`.
    pub fn d0(&self) -> DMatrix<f64> {
        &self.a * &self.w
    }

    /// Row masses `h_j = ||a_j||_1`.
    pub fn row_mass(&self) -> Vec<f64> {
        self.a.row_iter().map(|r| r.iter().sum()).collect()
    }

    /// For every word, the topic it anchors (exactly one nonzero entry).
    pub fn anchor_topics(&self) -> Vec<Option<usize>> {
        self.a
            .row_iter()
            .map(|r| {
                let nz: Vec<usize> = (0..r.len()).filter(|&c| r[c] != 0.0).collect();
                (nz.len() == 1).then(|| nz[0])
            })
            .collect()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.a.ncols() != self.w.nrows() {
            return Err(TopicError::DimensionMismatch(format!(
                "A is {}x{} but W is {}x{}",
                self.a.nrows(),
                self.a.ncols(),
                self.w.nrows(),
                self.w.ncols()
            )));
        }
        for (name, m) in [("A", &self.a), ("W", &self.w)] {
            if m.iter().any(|&x| !(x >= 0.0)) {
                return Err(TopicError::InvalidArgument(format!("{name} has negative entries")));
            }
            for (c, col) in m.column_iter().enumerate() {
                let s: f64 = col.iter().sum();
                if (s - 1.0).abs() > tol {
                    return Err(TopicError::InvalidArgument(format!(
                        "column {c} of {name} sums to {s}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// How the non-anchor part of `A` is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    /// Anchor blocks `delta_p e_k`, remaining entries iid Uniform(0, 1).
    Basic,
    /// Remaining entries exponential with mean `(p_s + j)^{-1.07}`.
    Zipf { p_s: f64 },
    /// Remaining rows split into a high-frequency block drawn from
    /// Uniform(0, h_max) and a low-frequency block from Uniform(0, h_min).
    TwoScale { h_max: f64 },
    /// Almost-anchor rows `delta_p (e_k + p_d (1 - e_k))`, otherwise basic.
    NearAnchorHomog { p_d: f64 },
    /// All rows Zipf-like; per topic, `m_p` rows whose largest entry is that
    /// topic have their other entries scaled by `p_d`.
    NearAnchorZipf { p_s: f64, p_d: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub p: usize,
    pub n: usize,
    /// Document length `N`.
    pub big_n: u64,
    pub k: usize,
    /// Anchor words per topic.
    pub m_p: usize,
    /// Mass of each anchor word.
    pub delta_p: f64,
    /// Pure documents per topic.
    pub m_n: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl SynthConfig {
    /// Basic configuration with the given dimensions.
    pub fn basic(p: usize, n: usize, big_n: u64, k: usize, m_p: usize, delta_p: f64, m_n: usize) -> Self {
        Self {
            p,
            n,
            big_n,
            k,
            m_p,
            delta_p,
            m_n,
            variant: Variant::Basic,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    fn anchor_mass(&self) -> f64 {
        self.m_p as f64 * self.delta_p
    }

    /// Column mass left for the non-anchor rows.
    fn remaining_mass(&self) -> f64 {
        let base = 1.0 - self.anchor_mass();
        match self.variant {
            Variant::NearAnchorHomog { p_d } => {
                base - self.anchor_mass() * (self.k as f64 - 1.0) * p_d
            }
            _ => base,
        }
    }

    /// `(n_max, n_min, h_min)` for the two-scale variant.
    pub fn two_scale_blocks(&self, h_max: f64) -> (usize, usize, f64) {
        let rest = 1.0 - self.anchor_mass();
        let n_max = (rest / (2.0 * h_max)).floor() as usize;
        let n_min = (self.p - self.k * self.m_p).saturating_sub(n_max);
        let h_min = (rest - h_max * n_max as f64) / n_min as f64;
        (n_max, n_min, h_min)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TopicError::InfeasibleConfig(msg));
        if self.k == 0 || self.p == 0 || self.n == 0 {
            return bad(format!("need p, n, K >= 1 (p={}, n={}, K={})", self.p, self.n, self.k));
        }
        if self.big_n == 0 {
            return bad("document length N must be positive".into());
        }
        if self.m_p == 0 {
            return bad("need at least one anchor word per topic (m_p >= 1)".into());
        }
        if self.k * self.m_p > self.p {
            return bad(format!("K*m_p = {} exceeds p = {}", self.k * self.m_p, self.p));
        }
        if self.k * self.m_n > self.n {
            return bad(format!("K*m_n = {} exceeds n = {}", self.k * self.m_n, self.n));
        }
        let uses_delta = !matches!(self.variant, Variant::NearAnchorZipf { .. });
        if uses_delta {
            if !(self.delta_p > 0.0) {
                return bad(format!("delta_p must be positive, got {}", self.delta_p));
            }
            if self.anchor_mass() > 1.0 / self.k as f64 {
                return bad(format!(
                    "m_p*delta_p = {} exceeds 1/K = {}",
                    self.anchor_mass(),
                    1.0 / self.k as f64
                ));
            }
            if self.p == self.k * self.m_p && self.remaining_mass() > 1e-12 {
                return bad("no non-anchor rows left to carry the remaining column mass".into());
            }
        }
        match self.variant {
            Variant::Basic => {}
            Variant::Zipf { p_s } => {
                if !(p_s > 0.0) {
                    return bad(format!("P_s must be positive, got {p_s}"));
                }
            }
            Variant::TwoScale { h_max } => {
                if !(h_max >= 1.0 / self.p as f64 && h_max < 1.0) {
                    return bad(format!("h_max = {h_max} not in [1/p, 1)"));
                }
                let (n_max, n_min, _) = self.two_scale_blocks(h_max);
                if n_max + 1 > self.p - self.k * self.m_p || n_min == 0 {
                    return bad(format!(
                        "two-scale split needs n_max = {n_max} < p - K*m_p = {}",
                        self.p - self.k * self.m_p
                    ));
                }
            }
            Variant::NearAnchorHomog { p_d } => {
                if !(0.0..=1.0).contains(&p_d) {
                    return bad(format!("P_d = {p_d} not in [0, 1]"));
                }
                if self.remaining_mass() <= 0.0 && self.p > self.k * self.m_p {
                    return bad("almost-anchor rows leave no mass for the other words".into());
                }
            }
            Variant::NearAnchorZipf { p_s, p_d } => {
                if !(p_s > 0.0) {
                    return bad(format!("P_s must be positive, got {p_s}"));
                }
                if !(0.0..=1.0).contains(&p_d) {
                    return bad(format!("P_d = {p_d} not in [0, 1]"));
                }
            }
        }
        Ok(())
    }
}

fn uniform_open(rng: &mut impl Rng) -> f64 {
    Open01.sample(rng)
}

/// Exponential with the given mean, by inversion.
fn exponential(rng: &mut impl Rng, mean: f64) -> f64 {
    -mean * uniform_open(rng).ln()
}

fn zipf_mean(p_s: f64, word: usize) -> f64 {
    // `word` is 1-based.
    (p_s + word as f64).powf(-ZIPF_EXPONENT)
}

fn normalize_block(a: &mut DMatrix<f64>, rows: std::ops::Range<usize>, mass: f64) {
    for c in 0..a.ncols() {
        let s: f64 = rows.clone().map(|j| a[(j, c)]).sum();
        for j in rows.clone() {
            a[(j, c)] *= mass / s;
        }
    }
}

/// Draws `(A, W)` for the configured variant. Deterministic in `cfg.seed`.
pub fn generate_model(cfg: &SynthConfig) -> Result<TopicModel> {
    cfg.validate()?;
    let a = generate_topics(cfg)?;
    let w = generate_weights(cfg);
    let model = TopicModel { a, w };
    model.validate(1e-12)?;
    Ok(model)
}

fn generate_topics(cfg: &SynthConfig) -> Result<DMatrix<f64>> {
    let (p, k, m_p) = (cfg.p, cfg.k, cfg.m_p);
    let mut rng = stream_rng(cfg.seed, 0);
    let mut a = DMatrix::zeros(p, k);
    let anchors = k * m_p;

    if let Variant::NearAnchorZipf { p_s, p_d } = cfg.variant {
        for j in 0..p {
            for c in 0..k {
                a[(j, c)] = exponential(&mut rng, zipf_mean(p_s, j + 1));
            }
        }
        for topic in 0..k {
            let eligible: Vec<usize> = (0..p).filter(|&j| row_argmax(&a, j) == topic).collect();
            if eligible.len() < m_p {
                return Err(TopicError::InfeasibleConfig(format!(
                    "topic {topic} is the largest entry of only {} rows, need m_p = {m_p}",
                    eligible.len()
                )));
            }
            let mut chosen: Vec<usize> = sample(&mut rng, eligible.len(), m_p)
                .into_iter()
                .map(|i| eligible[i])
                .collect();
            chosen.sort_unstable();
            for j in chosen {
                for c in 0..k {
                    if c != topic {
                        a[(j, c)] *= p_d;
                    }
                }
            }
        }
        normalize_block(&mut a, 0..p, 1.0);
        return Ok(a);
    }

    let off_anchor = match cfg.variant {
        Variant::NearAnchorHomog { p_d } => p_d,
        _ => 0.0,
    };
    for topic in 0..k {
        for j in topic * m_p..(topic + 1) * m_p {
            for c in 0..k {
                a[(j, c)] = if c == topic { cfg.delta_p } else { cfg.delta_p * off_anchor };
            }
        }
    }
    if anchors == p {
        return Ok(a);
    }
    match cfg.variant {
        Variant::Basic | Variant::NearAnchorHomog { .. } => {
            for j in anchors..p {
                for c in 0..k {
                    a[(j, c)] = uniform_open(&mut rng);
                }
            }
        }
        Variant::Zipf { p_s } => {
            for j in anchors..p {
                for c in 0..k {
                    a[(j, c)] = exponential(&mut rng, zipf_mean(p_s, j + 1));
                }
            }
        }
        Variant::TwoScale { h_max } => {
            let (n_max, _, h_min) = cfg.two_scale_blocks(h_max);
            for j in anchors..p {
                let scale = if j < anchors + n_max { h_max } else { h_min };
                for c in 0..k {
                    a[(j, c)] = scale * uniform_open(&mut rng);
                }
            }
        }
        Variant::NearAnchorZipf { .. } => unreachable!(),
    }
    normalize_block(&mut a, anchors..p, cfg.remaining_mass());
    Ok(a)
}

fn row_argmax(a: &DMatrix<f64>, j: usize) -> usize {
    let mut best = 0;
    for c in 1..a.ncols() {
        if a[(j, c)] > a[(j, best)] {
            best = c;
        }
    }
    best
}

fn generate_weights(cfg: &SynthConfig) -> DMatrix<f64> {
    let (k, n, m_n) = (cfg.k, cfg.n, cfg.m_n);
    let mut rng = stream_rng(cfg.seed, 1);
    let mut w = DMatrix::zeros(k, n);
    for topic in 0..k {
        for i in topic * m_n..(topic + 1) * m_n {
            w[(topic, i)] = 1.0;
        }
    }
    for i in k * m_n..n {
        for c in 0..k {
            w[(c, i)] = uniform_open(&mut rng);
        }
        let s: f64 = w.column(i).sum();
        w.column_mut(i).iter_mut().for_each(|x| *x /= s);
    }
    w
}
