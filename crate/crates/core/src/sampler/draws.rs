use ndarray::Array2;
use statrs::statistics::{Data, OrderStatistics, Statistics};

use super::chain::ChainOutput;
use super::diagnostics::gelman_rubin;
use crate::error::Result;
use crate::model::NUM_LEVELS;

/// Retained draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    /// 1-based sweep number of each retained draw.
    pub iterations: Vec<usize>,
    pub pi: Vec<Vec<f64>>,
    pub levels: Vec<[f64; NUM_LEVELS]>,
    /// Theta acceptance rate after burn-in.
    pub acceptance_rate: f64,
    /// Jump size in force after burn-in.
    pub jump_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsmfSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub causes: Vec<String>,
    pub death_ids: Vec<String>,
    pub chains: Vec<ChainDraws>,
    /// N x C posterior cause probabilities per death, pooled over chains.
    pub individual: Array2<f64>,
}

impl PosteriorDraws {
    pub fn from_chains(causes: Vec<String>, death_ids: Vec<String>, outputs: Vec<ChainOutput>) -> Self {
        let mut individual = Array2::zeros((death_ids.len(), causes.len()));
        let mut chains = Vec::with_capacity(outputs.len());
        for out in outputs {
            individual += &out.individual_sum;
            chains.push(out.draws);
        }
        for mut row in individual.rows_mut() {
            let total = row.sum();
            if total > 0.0 {
                row /= total;
            }
        }
        Self {
            causes,
            death_ids,
            chains,
            individual,
        }
    }

    pub fn n_causes(&self) -> usize {
        self.causes.len()
    }

    /// All retained pi draws of one cause, chains concatenated.
    pub fn cause_series(&self, cause: usize) -> Vec<f64> {
        self.chains
            .iter()
            .flat_map(|ch| ch.pi.iter().map(move |p| p[cause]))
            .collect()
    }

    pub fn csmf_mean(&self) -> Vec<f64> {
        (0..self.n_causes())
            .map(|k| self.cause_series(k).mean())
            .collect()
    }

    /// Pooled posterior summary per cause.
    pub fn csmf_summary(&self) -> Vec<CsmfSummary> {
        (0..self.n_causes())
            .map(|k| {
                let xs = self.cause_series(k);
                let mean = xs.iter().mean();
                let sd = if xs.len() > 1 { xs.iter().std_dev() } else { 0.0 };
                let mut data = Data::new(xs);
                CsmfSummary {
                    mean,
                    sd,
                    q025: data.quantile(0.025),
                    q50: data.quantile(0.5),
                    q975: data.quantile(0.975),
                }
            })
            .collect()
    }

    /// Potential scale reduction of every cause's pi series.
    pub fn psrf(&self) -> Result<Vec<f64>> {
        (0..self.n_causes())
            .map(|k| {
                let series: Vec<Vec<f64>> = self
                    .chains
                    .iter()
                    .map(|ch| ch.pi.iter().map(|p| p[k]).collect())
                    .collect();
                gelman_rubin(&series)
            })
            .collect()
    }

    /// Top-1 cause per death, ties to the lower index.
    pub fn top_causes(&self) -> Vec<usize> {
        self.individual
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
                    .0
            })
            .collect()
    }
}
