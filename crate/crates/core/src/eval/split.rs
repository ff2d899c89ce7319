use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::sampler::draw_categorical;

fn split_with<R: Rng>(
    labeled: &LabeledDataset,
    test_fraction: f64,
    rng: &mut R,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument("test fraction must lie in (0, 1)".into()));
    }
    let n = labeled.n_deaths();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Error::InvalidArgument(format!(
            "splitting {n} deaths at {test_fraction} leaves one side empty"
        )));
    }
    let mut is_test = vec![false; n];
    for i in index::sample(rng, n, n_test) {
        is_test[i] = true;
    }
    let test: Vec<usize> = (0..n).filter(|&i| is_test[i]).collect();
    let train: Vec<usize> = (0..n).filter(|&i| !is_test[i]).collect();
    Ok((labeled.subset(&train)?, labeled.subset(&test)?))
}

/// Uniform split without replacement; rows keep their original order.
pub fn random_split(
    labeled: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    split_with(labeled, test_fraction, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampledSplit {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    /// CSMF the test set was resampled toward.
    pub target_csmf: Vec<f64>,
}

/// Random split followed by resampling the test deaths with replacement
/// toward a CSMF drawn from a symmetric Dirichlet. Each resampled death
/// picks a cause from the target, then a test death of that cause
/// uniformly. Resampled ids are `{original}.{k}` with `k` counting repeats.
pub fn dirichlet_resample_split(
    labeled: &LabeledDataset,
    test_fraction: f64,
    concentration: f64,
    seed: u64,
) -> Result<ResampledSplit> {
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::InvalidArgument("concentration must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (train, pool) = split_with(labeled, test_fraction, &mut rng)?;
    let c = labeled.n_causes();
    let gamma = Gamma::new(concentration, 1.0).expect("positive shape");
    let mut target: Vec<f64> = (0..c).map(|_| gamma.sample(&mut rng)).collect();
    normalise_or_pick(&mut target, &mut rng);

    let mut by_cause: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (i, &l) in pool.labels.iter().enumerate() {
        by_cause[l].push(i);
    }
    let missing: Vec<usize> = (0..c)
        .filter(|&k| target[k] > 0.0 && by_cause[k].is_empty())
        .collect();
    if !missing.is_empty() {
        log::warn!(
            "{} causes drawn in the target have no test deaths; renormalising over the rest",
            missing.len()
        );
        for &k in &missing {
            target[k] = 0.0;
        }
        normalise_or_pick(&mut target, &mut rng);
        if target.iter().zip(&by_cause).any(|(&t, b)| t > 0.0 && b.is_empty()) {
            // the fallback pick hit an empty cause; restrict to represented ones
            target = by_cause.iter().map(|b| b.len() as f64).collect();
            normalise_or_pick(&mut target, &mut rng);
        }
    }

    let represented = by_cause.iter().filter(|b| !b.is_empty()).count();
    if represented == 1 {
        let k = by_cause.iter().position(|b| !b.is_empty()).expect("one cause");
        let mut point = vec![0.0; c];
        point[k] = 1.0;
        return Ok(ResampledSplit {
            train,
            test: pool,
            target_csmf: point,
        });
    }

    let n_test = pool.n_deaths();
    let mut rows = Vec::with_capacity(n_test);
    let mut repeats: HashMap<usize, usize> = HashMap::new();
    let mut ids = Vec::with_capacity(n_test);
    for _ in 0..n_test {
        let k = draw_categorical(&target, rng.random());
        let members = &by_cause[k];
        let r = members[rng.random_range(0..members.len())];
        let rep = repeats.entry(r).or_insert(0);
        *rep += 1;
        ids.push(format!("{}.{}", pool.dataset.death_ids()[r], rep));
        rows.push(r);
    }
    Ok(ResampledSplit {
        train,
        test: pool.select(&rows, ids)?,
        target_csmf: target,
    })
}

/// Normalises to the simplex; if everything underflowed, puts all mass on
/// one uniformly chosen entry.
fn normalise_or_pick<R: Rng>(v: &mut [f64], rng: &mut R) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        v.iter_mut().for_each(|x| *x /= total);
    } else {
        let k = rng.random_range(0..v.len());
        v.iter_mut().for_each(|x| *x = 0.0);
        v[k] = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::simulate_from_probs;
    use ndarray::Array2;

    fn labeled(n: usize, pi: &[f64], seed: u64) -> LabeledDataset {
        let c = pi.len();
        let probs = Array2::from_elem((2, c), 0.5);
        let syms = vec!["s1".to_string(), "s2".to_string()];
        let causes: Vec<String> = (0..c).map(|k| format!("c{k}")).collect();
        simulate_from_probs(pi, &probs, &syms, &causes, n, seed, 0.0).unwrap()
    }

    #[test]
    fn random_split_sizes_and_partition() {
        let d = labeled(100, &[0.5, 0.5], 1);
        let (train, test) = random_split(&d, 0.25, 7).unwrap();
        assert_eq!((train.n_deaths(), test.n_deaths()), (75, 25));
        let mut all: Vec<&String> = train
            .dataset
            .death_ids()
            .iter()
            .chain(test.dataset.death_ids())
            .collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 100);
        assert_eq!(random_split(&d, 0.25, 7).unwrap(), (train, test));
        assert!(random_split(&d, 0.0, 7).is_err());
        assert!(random_split(&d, 0.001, 7).is_err());
    }

    #[test]
    fn huge_concentration_gives_uniform_target() {
        let d = labeled(400, &[0.25; 4], 2);
        let r = dirichlet_resample_split(&d, 0.5, 1e6, 3).unwrap();
        for t in &r.target_csmf {
            assert!((t - 0.25).abs() < 0.01);
        }
        assert_eq!(r.test.n_deaths(), 200);
    }

    #[test]
    fn single_cause_pool_is_unchanged() {
        let d = labeled(40, &[1.0, 0.0, 0.0], 4);
        let r = dirichlet_resample_split(&d, 0.5, 1.0, 5).unwrap();
        let (_, plain) = random_split(&d, 0.5, 5).unwrap();
        assert_eq!(r.test, plain);
        assert_eq!(r.target_csmf, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn resampled_labels_follow_target() {
        let d = labeled(20_000, &[0.2; 5], 6);
        let r = dirichlet_resample_split(&d, 0.5, 1.0, 8).unwrap();
        let n = r.test.n_deaths() as f64;
        let got = r.test.csmf();
        for (g, t) in got.iter().zip(&r.target_csmf) {
            let sd = (t * (1.0 - t) / n).sqrt();
            assert!((g - t).abs() <= 3.0 * sd + 1e-12, "{g} vs {t}");
        }
        let ids = r.test.dataset.death_ids();
        assert!(ids.iter().all(|id| id.contains('.')));
    }

    #[test]
    fn concentrated_resample_agrees_with_plain_split() {
        let d = labeled(20_000, &[0.25; 4], 9);
        let r = dirichlet_resample_split(&d, 0.5, 1e6, 10).unwrap();
        let (_, plain) = random_split(&d, 0.5, 10).unwrap();
        assert_eq!(r.test.n_deaths(), 10_000);
        let l1: f64 = r
            .test
            .csmf()
            .iter()
            .zip(plain.csmf())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(l1 < 0.02, "{l1}");
    }
}
