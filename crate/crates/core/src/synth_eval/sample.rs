use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::generate::TopicModel;
use crate::corpus::DocTermMatrix;
use crate::error::{Result, TopicError};
use crate::rng::stream_rng;

/// Document lengths for [`sample_corpus`].
#[derive(Debug, Clone, PartialEq)]
pub enum DocLengths {
    Fixed(u64),
    PerDoc(Vec<u64>),
}

impl DocLengths {
    fn get(&self, i: usize) -> u64 {
        match self {
            DocLengths::Fixed(n) => *n,
            DocLengths::PerDoc(v) => v[i],
        }
    }
}

/// One multinomial draw of `total` items over `pmf`, as a sequence of
/// conditional binomials. Returns nonzero `(category, count)` pairs.
pub fn sample_multinomial(pmf: &[f64], total: u64, rng: &mut impl Rng) -> Vec<(usize, u64)> {
    let mut suffix = vec![0.0; pmf.len() + 1];
    for j in (0..pmf.len()).rev() {
        suffix[j] = suffix[j + 1] + pmf[j].max(0.0);
    }
    let last = pmf.iter().rposition(|&x| x > 0.0);
    let mut out = Vec::new();
    let mut remaining = total;
    for (j, &pj) in pmf.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if !(pj > 0.0) {
            continue;
        }
        let count = if Some(j) == last {
            remaining
        } else {
            let q = (pj / suffix[j]).clamp(0.0, 1.0);
            if q >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, q)
                    .expect("probability in [0, 1)")
                    .sample(rng)
            }
        };
        if count > 0 {
            out.push((j, count));
            remaining -= count;
        }
    }
    out
}

/// Draws document `i` as `Multinomial(N_i, (A W) e_i)`. Each document uses
/// its own stream of `seed`, so the result is independent of threading.
pub fn sample_corpus(model: &TopicModel, lengths: &DocLengths, seed: u64) -> Result<DocTermMatrix> {
    let d0 = model.d0();
    let (p, n) = d0.shape();
    if let DocLengths::PerDoc(v) = lengths {
        if v.len() != n {
            return Err(TopicError::DimensionMismatch(format!(
                "{} document lengths for {n} documents",
                v.len()
            )));
        }
    }
    let docs: Vec<Vec<(usize, u64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            sample_multinomial(d0.column(i).as_slice(), lengths.get(i), &mut rng)
        })
        .collect();
    let triplets = docs
        .into_iter()
        .enumerate()
        .flat_map(|(i, doc)| doc.into_iter().map(move |(j, c)| (j, i, c)));
    DocTermMatrix::from_triplets(p, n, triplets)
}
