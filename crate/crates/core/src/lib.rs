//! Spectral estimation of probabilistic topic models.
//!
//! Given a `p x n` word-count corpus and a number of topics `K`, the
//! estimator recovers the `p x K` topic matrix by
//!
//! 1. normalizing word frequencies by their corpus-wide means and taking the
//!    top-`K` left singular vectors ([`spectral`]),
//! 2. dividing singular vectors 2..K entry-wise by the first one, which places
//!    every word on a low-dimensional simplex,
//! 3. locating the simplex vertices by k-means followed by an exhaustive
//!    vertex search ([`vertex_hunt`]),
//! 4. reading each word's barycentric weights off the simplex and mapping them
//!    back to topic-word frequencies ([`estimator`]).
//!
//! [`synth_eval`] provides synthetic corpora and the permutation-minimized
//! l1 loss used to evaluate estimates.

pub mod corpus;
pub mod error;
pub mod estimator;
pub mod export;
pub mod rng;
pub mod spectral;
pub mod synth_eval;
pub mod vertex_hunt;

pub use corpus::{DocTermMatrix, PreprocessOptions, PreprocessReport};
pub use error::{Result, TopicError};
pub use estimator::{fit, fit_frequencies, FitOptions, TopicEstimate};
pub use spectral::{RatioMatrix, SpectralDecomposition, SvdMethod, SvdOptions};
pub use synth_eval::{
    generate_model, l1_loss, run_monte_carlo, sample_corpus, DocLengths, LossReport,
    MonteCarloReport, SynthConfig, TopicModel, Variant,
};
pub use vertex_hunt::{
    distance_to_simplex, hunt_vertices, kmeans, KMeansOptions, KMeansResult, VertexHuntResult,
};

pub use nalgebra::{DMatrix, DVector};
