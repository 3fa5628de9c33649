use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::generate::{generate_model, SynthConfig, TopicModel};
use super::loss::{l1_loss, LossReport};
use super::sample::{sample_corpus, DocLengths};
use crate::corpus::DocTermMatrix;
use crate::error::{Result, TopicError};
use crate::estimator::{fit, FitOptions, TopicEstimate};
use crate::rng::derive_seed;

/// Seeds used by one replicate, all derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RepSeeds {
    pub rep: u64,
    pub model: u64,
    pub corpus: u64,
    pub fit: u64,
}

impl RepSeeds {
    pub fn new(master: u64, rep: usize) -> Self {
        let rep = derive_seed(master, rep as u64);
        Self {
            rep,
            model: derive_seed(rep, 0),
            corpus: derive_seed(rep, 1),
            fit: derive_seed(rep, 2),
        }
    }
}

/// Everything produced by a single replicate.
#[derive(Debug, Clone)]
pub struct Replicate {
    pub seeds: RepSeeds,
    pub model: TopicModel,
    pub corpus: DocTermMatrix,
    pub estimate: TopicEstimate,
    pub loss: LossReport,
    pub wall_time_ms: f64,
}

/// Runs replicate `rep`: draw a model, sample a corpus, fit, score.
pub fn run_replicate(cfg: &SynthConfig, rep: usize, fit_opts: &FitOptions) -> Result<Replicate> {
    let start = Instant::now();
    let seeds = RepSeeds::new(cfg.seed, rep);
    let model = generate_model(&SynthConfig {
        seed: seeds.model,
        ..cfg.clone()
    })?;
    let corpus = sample_corpus(&model, &DocLengths::Fixed(cfg.big_n), seeds.corpus)?;
    let opts = FitOptions {
        seed: seeds.fit,
        ..fit_opts.clone()
    };
    let estimate = fit(&corpus, cfg.k, &opts)?;
    let loss = l1_loss(&estimate.a_hat, &model.a)?;
    Ok(Replicate {
        seeds,
        model,
        corpus,
        estimate,
        loss,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RepRow {
    pub rep: usize,
    pub loss: f64,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub rows: Vec<RepRow>,
    pub mean_loss: f64,
    /// Standard error of the mean; `None` with a single replicate.
    pub stderr: Option<f64>,
    pub config: SynthConfig,
}

/// Mean and standard error of `xs` (sample variance with `n - 1`).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Independent replicates of [`run_replicate`], run in parallel and reported
/// in replicate order. The result does not depend on the thread count.
pub fn run_monte_carlo(cfg: &SynthConfig, reps: usize, fit_opts: &FitOptions) -> Result<MonteCarloReport> {
    if reps == 0 {
        return Err(TopicError::InvalidArgument("reps must be at least 1".into()));
    }
    cfg.validate()?;
    let rows = (0..reps)
        .into_par_iter()
        .map(|rep| {
            run_replicate(cfg, rep, fit_opts).map(|r| RepRow {
                rep,
                loss: r.loss.loss,
                wall_time_ms: r.wall_time_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let losses: Vec<f64> = rows.iter().map(|r| r.loss).collect();
    let (mean_loss, stderr) = mean_and_stderr(&losses);
    Ok(MonteCarloReport {
        rows,
        mean_loss,
        stderr,
        config: cfg.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        let (m, s) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s.unwrap() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_stderr(&[7.0]), (7.0, None));
    }

    #[test]
    fn reproducible_small_run() {
        let cfg = SynthConfig::basic(60, 80, 400, 3, 3, 0.02, 4).with_seed(9);
        let a = run_monte_carlo(&cfg, 3, &FitOptions::default()).unwrap();
        let b = run_monte_carlo(&cfg, 3, &FitOptions::default()).unwrap();
        let la: Vec<f64> = a.rows.iter().map(|r| r.loss).collect();
        let lb: Vec<f64> = b.rows.iter().map(|r| r.loss).collect();
        assert_eq!(la, lb);
        assert_eq!(a.rows.iter().map(|r| r.rep).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(a.mean_loss.is_finite() && a.stderr.is_some());
        assert!(run_monte_carlo(&cfg, 0, &FitOptions::default()).is_err());
    }
}
