use crate::error::{Error, Result};

/// Potential scale reduction factor of equally long chains. Returns 1 when
/// every value is identical and infinity when chains are constant at
/// different values.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InvalidArgument("at least two chains are required".into()));
    }
    let n = chains[0].len();
    if n < 2 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidArgument(
            "chains must have equal length of at least two".into(),
        ));
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mean)| c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m as f64;
    let grand = means.iter().sum::<f64>() / m as f64;
    let b_over_n = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    if w == 0.0 {
        return Ok(if b_over_n == 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok((((nf - 1.0) / nf * w + b_over_n) / w).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn identical_chains_shrink_below_one() {
        let c = vec![1.0, 2.0, 3.0, 4.0];
        let r = gelman_rubin(&[c.clone(), c]).unwrap();
        assert!((r - (3.0f64 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_chains() {
        assert_eq!(gelman_rubin(&[vec![2.0; 5], vec![2.0; 5]]).unwrap(), 1.0);
        assert_eq!(gelman_rubin(&[vec![2.0; 5], vec![3.0; 5]]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(gelman_rubin(&[vec![1.0, 2.0]]).is_err());
        assert!(gelman_rubin(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(gelman_rubin(&[vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn hand_computed_value() {
        // means 2 and 5, within variances 1 and 1, n = 3
        let r = gelman_rubin(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let (w, b_over_n) = (1.0f64, 4.5);
        let expect = ((2.0 / 3.0 * w + b_over_n) / w).sqrt();
        assert!((r - expect).abs() < 1e-12);
    }

    #[test]
    fn same_distribution_converges() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let chains: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        assert!(gelman_rubin(&chains).unwrap() < 1.05);
    }
}
