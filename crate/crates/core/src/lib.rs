//! Bayesian cause-of-death assignment from verbal autopsy symptoms.
//!
//! Symptom likelihoods come from an expert rank matrix whose letter grades
//! share one probability each. The sampler estimates those grade values,
//! each death's cause and the population cause fractions jointly. An
//! InterVA baseline, EM debiasing of physician codes and an evaluation
//! harness sit alongside.

pub mod error;
pub mod eval;
pub mod ingest;
pub mod interva;
pub mod model;
pub mod physician;
pub mod sampler;

pub use error::{Error, Result};
pub use model::{
    naive_bayes_posterior, softmax_csmf, CondProbState, CsmfPrior, CsmfState, HyperParams,
    LevelAlphabet, RankMatrix, SymptomDataset, SymptomValue, NUM_LEVELS, PROB_EPS,
};
