//! Metropolis-within-Gibbs sampler: cause assignments, shared grade
//! probabilities under strict ordering, and the softmax CSMF with its
//! normal hyperprior.

mod chain;
mod diagnostics;
mod draws;
pub mod tbeta;

pub use chain::{
    fit, sample_levels, sample_mu, sample_sigma2, sample_theta, ChainOutput, ChainState,
    LevelCounts, Sampler, SIGMA2_FLOOR,
};
pub(crate) use chain::draw_categorical;
pub use diagnostics::gelman_rubin;
pub use draws::{ChainDraws, CsmfSummary, PosteriorDraws};
pub use tbeta::sample_truncated_beta;
