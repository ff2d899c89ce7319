//! InterVA propensity baseline.
//!
//! The propensity for a cause is its prior weight times the product of
//! `P(s | c)` over the symptoms reported present; absent and missing
//! symptoms are ignored. This is also used to seed the sampler's initial
//! cause assignments.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{normalize_log_weights, SymptomDataset, SymptomValue};

/// Outcome of the propensity calculation for one death.
#[derive(Debug, Clone, PartialEq)]
pub enum Propensity {
    Determined(Vec<f64>),
    /// Every cause had zero propensity.
    Undetermined,
}

impl Propensity {
    pub fn as_slice(&self) -> Option<&[f64]> {
        match self {
            Propensity::Determined(p) => Some(p),
            Propensity::Undetermined => None,
        }
    }
}

/// Propensity of each cause for one death, normalised over causes. Entries
/// of `p_sc` may be exactly 0 or 1.
pub fn interva_propensity(
    row: &[SymptomValue],
    pi0: &[f64],
    p_sc: &Array2<f64>,
) -> Result<Propensity> {
    let (s, c) = p_sc.dim();
    if row.len() != s || pi0.len() != c {
        return Err(Error::Dimension(format!(
            "row has {} symptoms and pi0 {} causes, p_sc is {s} x {c}",
            row.len(),
            pi0.len()
        )));
    }
    if !row.contains(&SymptomValue::Yes) {
        let total: f64 = pi0.iter().sum();
        if !(total > 0.0) {
            return Ok(Propensity::Undetermined);
        }
        return Ok(Propensity::Determined(pi0.iter().map(|p| p / total).collect()));
    }
    let mut logw: Vec<f64> = pi0.iter().map(|p| p.ln()).collect();
    for (j, _) in row
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == SymptomValue::Yes)
    {
        for (w, p) in logw.iter_mut().zip(p_sc.row(j)) {
            *w += p.ln();
        }
    }
    if normalize_log_weights(&mut logw) {
        Ok(Propensity::Determined(logw))
    } else {
        Ok(Propensity::Undetermined)
    }
}

#[derive(Debug, Clone)]
pub struct InterVaResult {
    /// Mean propensity over determined deaths; all zero when none are.
    pub csmf: Vec<f64>,
    pub n_undetermined: usize,
    pub propensities: Vec<Propensity>,
}

pub fn interva_csmf(
    dataset: &SymptomDataset,
    pi0: &[f64],
    p_sc: &Array2<f64>,
) -> Result<InterVaResult> {
    let propensities = dataset
        .rows()
        .map(|row| interva_propensity(row, pi0, p_sc))
        .collect::<Result<Vec<_>>>()?;
    let mut csmf = vec![0.0; pi0.len()];
    let mut determined = 0usize;
    for p in propensities.iter().filter_map(Propensity::as_slice) {
        determined += 1;
        csmf.iter_mut().zip(p).for_each(|(a, b)| *a += b);
    }
    if determined > 0 {
        csmf.iter_mut().for_each(|a| *a /= determined as f64);
    }
    let n_undetermined = propensities.len() - determined;
    if n_undetermined > 0 {
        log::warn!("{n_undetermined} deaths have zero propensity for every cause");
    }
    Ok(InterVaResult {
        csmf,
        n_undetermined,
        propensities,
    })
}
