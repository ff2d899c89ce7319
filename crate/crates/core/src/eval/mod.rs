//! Evaluation harness: accuracy metrics, train/test protocols, empirical
//! rank construction and synthetic data.

mod metrics;
mod rankify;
mod simulate;
mod split;

pub use metrics::{
    chance_corrected_concordance, confusion_matrix, csmf_accuracy, top_k_accuracy, Concordance,
};
pub use rankify::{empirical_cond_probs, rankify_default, rankify_quantile, EmpiricalProbs, QuantileRanking};
pub use simulate::{random_rank_matrix, simulate_dataset, simulate_from_probs};
pub use split::{dirichlet_resample_split, random_split, ResampledSplit};

use crate::error::{Error, Result};
use crate::model::SymptomDataset;

/// Symptom data with a known cause per death.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub dataset: SymptomDataset,
    pub labels: Vec<usize>,
    pub causes: Vec<String>,
}

impl LabeledDataset {
    pub fn new(dataset: SymptomDataset, labels: Vec<usize>, causes: Vec<String>) -> Result<Self> {
        if labels.len() != dataset.n_deaths() {
            return Err(Error::Dimension(format!(
                "{} labels for {} deaths",
                labels.len(),
                dataset.n_deaths()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= causes.len()) {
            return Err(Error::InvalidArgument(format!(
                "label {l} out of range for {} causes",
                causes.len()
            )));
        }
        Ok(Self {
            dataset,
            labels,
            causes,
        })
    }

    pub fn n_deaths(&self) -> usize {
        self.labels.len()
    }

    pub fn n_causes(&self) -> usize {
        self.causes.len()
    }

    /// Observed cause fractions.
    pub fn csmf(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.causes.len()];
        for &l in &self.labels {
            out[l] += 1.0;
        }
        if !self.labels.is_empty() {
            out.iter_mut().for_each(|x| *x /= self.labels.len() as f64);
        }
        out
    }

    /// Subset by row, with new unique ids.
    pub fn select(&self, rows: &[usize], ids: Vec<String>) -> Result<Self> {
        Ok(Self {
            dataset: self.dataset.select_rows(rows, ids)?,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            causes: self.causes.clone(),
        })
    }

    fn subset(&self, rows: &[usize]) -> Result<Self> {
        let ids = rows
            .iter()
            .map(|&r| self.dataset.death_ids()[r].clone())
            .collect();
        self.select(rows, ids)
    }
}
