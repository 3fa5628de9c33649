//! Synthetic topic models, corpus sampling and loss evaluation.

mod generate;
mod loss;
mod monte_carlo;
mod sample;

pub use generate::{generate_model, SynthConfig, TopicModel, Variant, ZIPF_EXPONENT};
pub use loss::{
    assignment_cost, brute_force_assignment, cost_matrix, l1_loss, l1_loss_with,
    min_cost_assignment, AssignmentSolver, LossReport, BRUTE_FORCE_MAX_K,
};
pub use monte_carlo::{
    mean_and_stderr, run_monte_carlo, run_replicate, MonteCarloReport, RepRow, RepSeeds,
    Replicate,
};
pub use sample::{sample_corpus, sample_multinomial, DocLengths};
