use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{LevelAlphabet, RankMatrix, SymptomDataset, SymptomValue, NUM_LEVELS};
use crate::sampler::draw_categorical;

/// Draws causes from `pi` and symptoms from the S x C matrix `probs`, then
/// hides each answer with probability `missing_rate`.
pub fn simulate_from_probs(
    pi: &[f64],
    probs: &Array2<f64>,
    symptoms: &[String],
    causes: &[String],
    n: usize,
    seed: u64,
    missing_rate: f64,
) -> Result<LabeledDataset> {
    let (s, c) = probs.dim();
    if pi.len() != c || symptoms.len() != s || causes.len() != c {
        return Err(Error::Dimension(format!(
            "probabilities are {s} x {c} but pi has {} entries and {} symptoms, {} causes were named",
            pi.len(),
            symptoms.len(),
            causes.len()
        )));
    }
    if pi.iter().any(|p| !(*p >= 0.0)) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument("pi must be a probability vector".into()));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument("symptom probabilities must lie in [0, 1]".into()));
    }
    if !(0.0..1.0).contains(&missing_rate) {
        return Err(Error::InvalidArgument("missing rate must lie in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n * s);
    for _ in 0..n {
        let k = draw_categorical(pi, rng.random());
        labels.push(k);
        for j in 0..s {
            let yes = rng.random::<f64>() < probs[[j, k]];
            let hide = missing_rate > 0.0 && rng.random::<f64>() < missing_rate;
            values.push(match (hide, yes) {
                (true, _) => SymptomValue::Missing,
                (false, true) => SymptomValue::Yes,
                (false, false) => SymptomValue::No,
            });
        }
    }
    let width = n.max(1).to_string().len();
    let ids = (0..n).map(|i| format!("d{:0width$}", i + 1)).collect();
    let ds = SymptomDataset::new(ids, symptoms.to_vec(), values)?;
    LabeledDataset::new(ds, labels, causes.to_vec())
}

/// Simulates from the generative model with grade values taken from the
/// alphabet as is.
pub fn simulate_dataset(
    pi: &[f64],
    alphabet: &LevelAlphabet,
    rank: &RankMatrix,
    n: usize,
    seed: u64,
    missing_rate: f64,
) -> Result<LabeledDataset> {
    let probs = rank.expand(alphabet.values());
    simulate_from_probs(pi, &probs, rank.symptoms(), rank.causes(), n, seed, missing_rate)
}

/// Rank matrix with grades drawn uniformly from the interior grades
/// (A+ through E).
pub fn random_rank_matrix(n_symptoms: usize, n_causes: usize, seed: u64) -> Result<RankMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grades = (0..n_symptoms * n_causes)
        .map(|_| rng.random_range(1..NUM_LEVELS as u8 - 1))
        .collect();
    let symptoms = (0..n_symptoms).map(|j| format!("s{}", j + 1)).collect();
    let causes = (0..n_causes).map(|k| format!("cause{}", k + 1)).collect();
    RankMatrix::new(symptoms, causes, grades)
}
