use ndarray::Array2;

use crate::error::{Error, Result};

/// `1 - sum |est - truth| / (2 (1 - min truth))`, clipped to [0, 1].
pub fn csmf_accuracy(est: &[f64], truth: &[f64]) -> Result<f64> {
    if truth.len() < 2 {
        return Err(Error::InvalidArgument("CSMF accuracy needs at least two causes".into()));
    }
    if est.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} estimated and {} true fractions",
            est.len(),
            truth.len()
        )));
    }
    let min = truth.iter().copied().fold(f64::INFINITY, f64::min);
    let err: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).abs()).sum();
    Ok((1.0 - err / (2.0 * (1.0 - min))).clamp(0.0, 1.0))
}

/// Share of deaths whose true cause ranks among the `k` most probable.
/// Equal probabilities rank the lower cause index first.
pub fn top_k_accuracy(individual: &Array2<f64>, labels: &[usize], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if individual.nrows() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} posterior rows for {} labels",
            individual.nrows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::InvalidArgument("no deaths to score".into()));
    }
    let hits = individual
        .rows()
        .into_iter()
        .zip(labels)
        .filter(|(row, &l)| {
            let p = row[l];
            let ahead = row
                .iter()
                .enumerate()
                .filter(|&(c, &q)| q > p || (q == p && c < l))
                .count();
            ahead < k
        })
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Concordance {
    /// `None` for causes with no true deaths.
    pub per_cause: Vec<Option<f64>>,
    pub mean: f64,
}

/// Per-cause recall rescaled so that random assignment scores zero.
pub fn chance_corrected_concordance(
    assigned: &[usize],
    labels: &[usize],
    n_causes: usize,
) -> Result<Concordance> {
    if n_causes < 2 {
        return Err(Error::InvalidArgument("concordance needs at least two causes".into()));
    }
    check_pairs(assigned, labels, n_causes)?;
    let mut tp = vec![0usize; n_causes];
    let mut total = vec![0usize; n_causes];
    for (&a, &l) in assigned.iter().zip(labels) {
        total[l] += 1;
        if a == l {
            tp[l] += 1;
        }
    }
    let chance = 1.0 / n_causes as f64;
    let per_cause: Vec<Option<f64>> = tp
        .iter()
        .zip(&total)
        .map(|(&t, &n)| (n > 0).then(|| (t as f64 / n as f64 - chance) / (1.0 - chance)))
        .collect();
    let present: Vec<f64> = per_cause.iter().flatten().copied().collect();
    if present.is_empty() {
        return Err(Error::InvalidArgument("no cause has a true death".into()));
    }
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    Ok(Concordance { per_cause, mean })
}

/// Cell `(r, c)` is the share of deaths of true cause `c` assigned `r`.
/// Columns of causes with no true deaths are zero.
pub fn confusion_matrix(assigned: &[usize], labels: &[usize], n_causes: usize) -> Result<Array2<f64>> {
    check_pairs(assigned, labels, n_causes)?;
    let mut m = Array2::<f64>::zeros((n_causes, n_causes));
    let mut total = vec![0usize; n_causes];
    for (&a, &l) in assigned.iter().zip(labels) {
        m[[a, l]] += 1.0;
        total[l] += 1;
    }
    for (c, &n) in total.iter().enumerate() {
        if n > 0 {
            m.column_mut(c).mapv_inplace(|x| x / n as f64);
        }
    }
    Ok(m)
}

fn check_pairs(assigned: &[usize], labels: &[usize], n_causes: usize) -> Result<()> {
    if assigned.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} assignments for {} labels",
            assigned.len(),
            labels.len()
        )));
    }
    if assigned.iter().chain(labels).any(|&x| x >= n_causes) {
        return Err(Error::InvalidArgument(format!("cause index out of range for {n_causes} causes")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn csmf_accuracy_cases() {
        assert_eq!(csmf_accuracy(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 1.0);
        assert_eq!(csmf_accuracy(&[1.0, 0.0], &[0.5, 0.5]).unwrap(), 0.0);
        let v = csmf_accuracy(&[0.5, 0.5], &[0.6, 0.4]).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-15);
        assert!(csmf_accuracy(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn top_k_cases() {
        let p = array![[0.5, 0.3, 0.2]];
        assert_eq!(top_k_accuracy(&p, &[1], 1).unwrap(), 0.0);
        assert_eq!(top_k_accuracy(&p, &[1], 2).unwrap(), 1.0);
        assert_eq!(top_k_accuracy(&p, &[2], 3).unwrap(), 1.0);
    }

    #[test]
    fn top_one_ties_pick_first_cause() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 3000;
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let p = Array2::from_elem((n, 4), 0.25);
        let expect = labels.iter().filter(|&&l| l == 0).count() as f64 / n as f64;
        assert_eq!(top_k_accuracy(&p, &labels, 1).unwrap(), expect);
    }

    #[test]
    fn concordance_cases() {
        let labels = [0, 1, 2, 0, 1, 2];
        let perfect = chance_corrected_concordance(&labels, &labels, 3).unwrap();
        assert!(perfect.per_cause.iter().all(|c| *c == Some(1.0)));
        assert_eq!(perfect.mean, 1.0);

        let all_first = chance_corrected_concordance(&[0; 6], &labels, 3).unwrap();
        assert_eq!(all_first.per_cause[0], Some(1.0));
        for c in 1..3 {
            assert!((all_first.per_cause[c].unwrap() + 0.5).abs() < 1e-15);
        }

        let missing = chance_corrected_concordance(&[0, 0], &[0, 0], 3).unwrap();
        assert_eq!(missing.per_cause[1], None);
        assert_eq!(missing.mean, 1.0);
        assert!(chance_corrected_concordance(&[], &[], 3).is_err());
    }

    #[test]
    fn random_assignment_has_no_concordance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (n, c) = (60_000, 5);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let assigned: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let r = chance_corrected_concordance(&assigned, &labels, c).unwrap();
        // recall per cause has sd sqrt(p(1-p)/(n/c)); rescaling divides by 1 - 1/c
        let sd = ((0.2 * 0.8) / (n / c) as f64).sqrt() / 0.8 / (c as f64).sqrt();
        assert!(r.mean.abs() < 3.0 * sd, "{}", r.mean);
    }

    #[test]
    fn confusion_cases() {
        let labels = [0, 1, 2, 1];
        assert_eq!(
            confusion_matrix(&labels, &labels, 3).unwrap(),
            Array2::<f64>::eye(3)
        );
        let swapped = [1, 0, 2, 0];
        let m = confusion_matrix(&swapped, &labels, 3).unwrap();
        assert_eq!(m, array![[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        // six deaths tallied by hand
        let labels = [0, 0, 0, 1, 1, 2];
        let assigned = [0, 1, 0, 1, 2, 2];
        let m = confusion_matrix(&assigned, &labels, 3).unwrap();
        let expect = array![
            [2.0 / 3.0, 0.0, 0.0],
            [1.0 / 3.0, 0.5, 0.0],
            [0.0, 0.5, 1.0]
        ];
        assert_eq!(m, expect);
    }

    proptest! {
        #[test]
        fn csmf_accuracy_bounded(
            raw in prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 2..8)
        ) {
            let norm = |v: Vec<f64>| { let t: f64 = v.iter().sum(); v.iter().map(|x| x / t).collect::<Vec<_>>() };
            let est = norm(raw.iter().map(|p| p.0).collect());
            let truth = norm(raw.iter().map(|p| p.1).collect());
            let a = csmf_accuracy(&est, &truth).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert_eq!(csmf_accuracy(&truth, &truth).unwrap(), 1.0);
            if est.iter().zip(&truth).any(|(x, y)| (x - y).abs() > 1e-9) {
                prop_assert!(a < 1.0);
            }
        }
    }
}
