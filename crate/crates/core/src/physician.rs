//! Physician broad-category codes: per-physician reporting-bias matrices
//! estimated by EM, and the category gate applied to the cause step of the
//! sampler.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};
use crate::model::{log_sum_exp, HyperParams, LevelAlphabet, RankMatrix, SymptomDataset, SymptomValue};
use crate::sampler::{PosteriorDraws, Sampler};

pub const DEFAULT_CATEGORIES: [&str; 6] = [
    "NCD",
    "TB/AIDS",
    "communicable",
    "maternal",
    "external",
    "unknown",
];

/// The category that every cause belongs to.
pub const UNKNOWN_CATEGORY: &str = "unknown";

pub fn default_categories() -> Vec<String> {
    DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicianCodes {
    categories: Vec<String>,
    physicians: Vec<String>,
    /// Per death, the (physician, category) codes it received.
    assignments: Vec<Vec<(usize, usize)>>,
}

impl PhysicianCodes {
    pub fn new(
        categories: Vec<String>,
        physicians: Vec<String>,
        assignments: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if categories.len() < 2 {
            return Err(Error::InvalidArgument("at least two categories are required".into()));
        }
        for &(m, g) in assignments.iter().flatten() {
            if m >= physicians.len() || g >= categories.len() {
                return Err(Error::InvalidArgument(format!(
                    "code ({m}, {g}) out of range for {} physicians and {} categories",
                    physicians.len(),
                    categories.len()
                )));
            }
        }
        Ok(Self {
            categories,
            physicians,
            assignments,
        })
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn physicians(&self) -> &[String] {
        &self.physicians
    }

    pub fn assignments(&self) -> &[Vec<(usize, usize)>] {
        &self.assignments
    }

    pub fn n_physicians(&self) -> usize {
        self.physicians.len()
    }

    pub fn n_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn is_coded(&self, death: usize) -> bool {
        !self.assignments[death].is_empty()
    }

    /// Share of each category among a death's codes; `None` when uncoded.
    pub fn code_fractions(&self, death: usize) -> Option<Vec<f64>> {
        let a = &self.assignments[death];
        if a.is_empty() {
            return None;
        }
        let mut out = vec![0.0; self.categories.len()];
        for &(_, g) in a {
            out[g] += 1.0;
        }
        out.iter_mut().for_each(|x| *x /= a.len() as f64);
        Some(out)
    }
}

/// C x G membership of causes in broad categories.
#[derive(Debug, Clone, PartialEq)]
pub struct CauseCategories {
    causes: Vec<String>,
    categories: Vec<String>,
    chi: Array2<bool>,
}

impl CauseCategories {
    /// Builds the gate from explicit memberships. The `unknown` category,
    /// when listed, contains every cause; causes with no listed category
    /// fall into it.
    pub fn from_pairs(causes: &[String], categories: &[String], pairs: &[(String, String)]) -> Result<Self> {
        let mut chi = Array2::from_elem((causes.len(), categories.len()), false);
        for (cause, cat) in pairs {
            let c = causes
                .iter()
                .position(|x| x == cause)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown cause `{cause}`")))?;
            let g = categories
                .iter()
                .position(|x| x == cat)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown category `{cat}`")))?;
            chi[[c, g]] = true;
        }
        if let Some(u) = categories.iter().position(|c| c == UNKNOWN_CATEGORY) {
            chi.column_mut(u).fill(true);
        }
        if let Some(c) = (0..causes.len()).find(|&c| !chi.row(c).iter().any(|&x| x)) {
            return Err(Error::InvalidArgument(format!(
                "cause `{}` belongs to no category",
                causes[c]
            )));
        }
        Ok(Self {
            causes: causes.to_vec(),
            categories: categories.to_vec(),
            chi,
        })
    }

    pub fn causes(&self) -> &[String] {
        &self.causes
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn chi(&self) -> &Array2<bool> {
        &self.chi
    }

    /// `sum_g t_g chi_cg` for every cause.
    pub fn cause_weights(&self, t: &[f64]) -> Vec<f64> {
        self.chi
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(t).filter(|(&x, _)| x).map(|(_, w)| w).sum())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DebiasResult {
    /// N x G debiased category weights. Uncoded deaths carry `pi_cat`.
    pub t: Array2<f64>,
    pub coded: Vec<bool>,
    /// Physicians with at least one code, in the order of `theta_bias`.
    pub physicians: Vec<String>,
    /// M x G x G; `theta_bias[[m, g, h]]` is the chance physician `m`
    /// reports `h` when the truth is `g`.
    pub theta_bias: Array3<f64>,
    pub pi_cat: Vec<f64>,
    /// S x G symptom probabilities given category.
    pub p_cond: Array2<f64>,
    /// Observed-data log-likelihood after each iteration.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates physician bias matrices and debiased category weights by EM
/// over the coded deaths.
pub fn em_debias(dataset: &SymptomDataset, codes: &PhysicianCodes, opts: EmOptions) -> Result<DebiasResult> {
    if codes.assignments().len() != dataset.n_deaths() {
        return Err(Error::Dimension(format!(
            "codes cover {} deaths but the dataset has {}",
            codes.assignments().len(),
            dataset.n_deaths()
        )));
    }
    let g_n = codes.n_categories();
    let s_n = dataset.n_symptoms();
    let coded_idx: Vec<usize> = (0..dataset.n_deaths()).filter(|&i| codes.is_coded(i)).collect();
    if coded_idx.is_empty() {
        return Err(Error::InvalidArgument("no death carries a physician code".into()));
    }

    let mut used = vec![0usize; codes.n_physicians()];
    for &(m, _) in codes.assignments().iter().flatten() {
        used[m] += 1;
    }
    let mut remap = vec![usize::MAX; codes.n_physicians()];
    let mut physicians = Vec::new();
    for (m, &n) in used.iter().enumerate() {
        if n == 0 {
            log::warn!("physician `{}` has no codes and is dropped", codes.physicians()[m]);
        } else {
            remap[m] = physicians.len();
            physicians.push(codes.physicians()[m].clone());
        }
    }
    let m_n = physicians.len();
    let z: Vec<Vec<(usize, usize)>> = coded_idx
        .iter()
        .map(|&i| codes.assignments()[i].iter().map(|&(m, g)| (remap[m], g)).collect())
        .collect();
    let n = coded_idx.len();

    let mut t = Array2::<f64>::zeros((n, g_n));
    for (r, &i) in coded_idx.iter().enumerate() {
        let f = codes.code_fractions(i).expect("coded death");
        t.row_mut(r).iter_mut().zip(f).for_each(|(a, b)| *a = b);
    }
    let mut theta = Array3::<f64>::zeros((m_n, g_n, g_n));
    let mut p_cond = Array2::<f64>::zeros((s_n, g_n));
    let mut pi = vec![0.0; g_n];
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iter {
        iterations += 1;
        // M-step
        theta.fill(0.0);
        for (r, zs) in z.iter().enumerate() {
            for &(m, h) in zs {
                for g in 0..g_n {
                    theta[[m, g, h]] += t[[r, g]];
                }
            }
        }
        for m in 0..m_n {
            for g in 0..g_n {
                let mut row = theta.slice_mut(ndarray::s![m, g, ..]);
                let total = row.sum();
                if total > 0.0 {
                    row /= total;
                } else {
                    row.fill(1.0 / g_n as f64);
                }
            }
        }
        let mut den = Array2::<f64>::zeros((s_n, g_n));
        p_cond.fill(0.0);
        for (r, &i) in coded_idx.iter().enumerate() {
            for (j, v) in dataset.row(i).iter().enumerate() {
                if !v.is_observed() {
                    continue;
                }
                for g in 0..g_n {
                    den[[j, g]] += t[[r, g]];
                    if *v == SymptomValue::Yes {
                        p_cond[[j, g]] += t[[r, g]];
                    }
                }
            }
        }
        p_cond.zip_mut_with(&den, |p, &d| *p = if d > 0.0 { *p / d } else { 0.5 });
        for (g, p) in pi.iter_mut().enumerate() {
            *p = t.column(g).sum() / n as f64;
        }

        // E-step
        let ln_pi: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
        let ln_theta = theta.mapv(f64::ln);
        let ln_p = p_cond.mapv(f64::ln);
        let ln_q = p_cond.mapv(|p| (-p).ln_1p());
        let mut ll = 0.0;
        let mut max_delta = 0.0f64;
        let mut lw = vec![0.0; g_n];
        for (r, &i) in coded_idx.iter().enumerate() {
            lw.copy_from_slice(&ln_pi);
            for &(m, h) in &z[r] {
                for (g, w) in lw.iter_mut().enumerate() {
                    *w += ln_theta[[m, g, h]];
                }
            }
            for (j, v) in dataset.row(i).iter().enumerate() {
                let src = match v {
                    SymptomValue::Yes => &ln_p,
                    SymptomValue::No => &ln_q,
                    SymptomValue::Missing => continue,
                };
                for (g, w) in lw.iter_mut().enumerate() {
                    *w += src[[j, g]];
                }
            }
            let norm = log_sum_exp(&lw);
            if !norm.is_finite() {
                log::warn!(
                    "death `{}` has zero likelihood under every category; keeping its weights",
                    dataset.death_ids()[i]
                );
                ll = f64::NEG_INFINITY;
                continue;
            }
            ll += norm;
            for (g, w) in lw.iter().enumerate() {
                let new = (w - norm).exp();
                max_delta = max_delta.max((new - t[[r, g]]).abs());
                t[[r, g]] = new;
            }
        }
        if let Some(&prev) = trace.last() {
            if ll < prev - 1e-8 * prev.abs().max(1.0) {
                log::warn!("EM log-likelihood decreased from {prev} to {ll}");
            }
        }
        trace.push(ll);
        if max_delta < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("EM stopped after {iterations} iterations without reaching tolerance {}", opts.tol);
    }

    let mut full_t = Array2::<f64>::zeros((dataset.n_deaths(), g_n));
    let mut coded = vec![false; dataset.n_deaths()];
    for i in 0..dataset.n_deaths() {
        full_t.row_mut(i).iter_mut().zip(&pi).for_each(|(a, b)| *a = *b);
    }
    for (r, &i) in coded_idx.iter().enumerate() {
        full_t.row_mut(i).assign(&t.row(r));
        coded[i] = true;
    }
    Ok(DebiasResult {
        t: full_t,
        coded,
        physicians,
        theta_bias: theta,
        pi_cat: pi,
        p_cond,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

/// Cause posterior restricted by category weights:
/// `p_c ∝ sum_g t_g chi_cg nb_c`. Falls back to `nb` when the weights
/// exclude every cause with mass.
pub fn adjusted_posterior(nb: &[f64], t_row: &[f64], chi: &Array2<bool>) -> Result<Vec<f64>> {
    let (c, g) = chi.dim();
    if nb.len() != c || t_row.len() != g {
        return Err(Error::Dimension(format!(
            "nb has {} causes and t {} categories, chi is {c} x {g}",
            nb.len(),
            t_row.len()
        )));
    }
    let mut out: Vec<f64> = chi
        .rows()
        .into_iter()
        .zip(nb)
        .map(|(row, &p)| {
            let w: f64 = row.iter().zip(t_row).filter(|(&x, _)| x).map(|(_, w)| w).sum();
            w * p
        })
        .collect();
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        log::warn!("category weights exclude every cause; using the naive Bayes posterior");
        return Ok(nb.to_vec());
    }
    out.iter_mut().for_each(|x| *x /= total);
    Ok(out)
}

/// Debiases the codes, then runs the sampler with the category gate on
/// coded deaths. Uncoded deaths use the plain cause posterior.
pub fn fit_with_physicians(
    dataset: &SymptomDataset,
    rank: &RankMatrix,
    alphabet: &LevelAlphabet,
    codes: &PhysicianCodes,
    gate: &CauseCategories,
    hyper: &HyperParams,
    opts: EmOptions,
) -> Result<(PosteriorDraws, Option<DebiasResult>)> {
    if gate.causes() != rank.causes() || gate.categories() != codes.categories() {
        return Err(Error::Dimension(
            "cause-category map does not match the probbase causes or the code categories".into(),
        ));
    }
    let sampler = Sampler::new(dataset, rank, alphabet, hyper)?;
    if !(0..dataset.n_deaths()).any(|i| codes.is_coded(i)) {
        log::warn!("no death is coded; fitting without physician information");
        return Ok((sampler.run(), None));
    }
    let debias = em_debias(dataset, codes, opts)?;
    let weights = (0..dataset.n_deaths())
        .map(|i| {
            debias.coded[i].then(|| gate.cause_weights(debias.t.row(i).as_slice().expect("contiguous")))
        })
        .collect();
    let draws = sampler.with_cause_weights(weights)?.run();
    Ok((draws, Some(debias)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SymptomValue::{Missing, No, Yes};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn gate_forces_sole_cause() {
        let chi = array![[true, false], [false, true], [true, false]];
        let p = adjusted_posterior(&[0.2, 0.3, 0.5], &[0.0, 1.0], &chi).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn all_ones_gate_is_identity() {
        let chi = Array2::from_elem((3, 2), true);
        let nb = [0.2, 0.3, 0.5];
        for t in [[0.5, 0.5], [0.9, 0.1], [0.0, 1.0]] {
            let p = adjusted_posterior(&nb, &t, &chi).unwrap();
            for (a, b) in p.iter().zip(&nb) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hand_cases() {
        let chi = array![[true, false], [true, false], [false, true]];
        let p = adjusted_posterior(&[0.2, 0.3, 0.5], &[0.5, 0.5], &chi).unwrap();
        for (a, b) in p.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = adjusted_posterior(&[0.2, 0.3, 0.5], &[0.8, 0.2], &chi).unwrap();
        for (a, b) in p.iter().zip([0.32, 0.48, 0.20]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_normaliser_falls_back() {
        let chi = array![[true, false], [true, false]];
        let p = adjusted_posterior(&[0.4, 0.6], &[0.0, 1.0], &chi).unwrap();
        assert_eq!(p, vec![0.4, 0.6]);
    }

    #[test]
    fn categories_from_pairs() {
        let causes = names("c", 3);
        let cats: Vec<String> = ["NCD", "external", "unknown"].map(String::from).to_vec();
        let pairs = vec![("c0".to_string(), "NCD".to_string()), ("c0".to_string(), "external".to_string())];
        let cc = CauseCategories::from_pairs(&causes, &cats, &pairs).unwrap();
        assert_eq!(cc.chi().row(0).to_vec(), vec![true, true, true]);
        assert_eq!(cc.chi().row(1).to_vec(), vec![false, false, true]);
        let no_unknown = &cats[..2];
        assert!(CauseCategories::from_pairs(&causes, no_unknown, &pairs).is_err());
        assert_eq!(cc.cause_weights(&[0.5, 0.3, 0.2]), vec![1.0, 0.2, 0.2]);
    }

    #[test]
    fn single_code_initialisation_is_indicator() {
        let ds = SymptomDataset::new(names("d", 3), names("s", 1), vec![Yes, No, Missing]).unwrap();
        let codes = PhysicianCodes::new(
            names("g", 2),
            names("p", 1),
            vec![vec![(0, 1)], vec![(0, 0)], vec![]],
        )
        .unwrap();
        assert_eq!(codes.code_fractions(0), Some(vec![0.0, 1.0]));
        assert_eq!(codes.code_fractions(2), None);
        let r = em_debias(&ds, &codes, EmOptions { max_iter: 1, tol: 0.0 }).unwrap();
        assert!(!r.coded[2]);
        assert_eq!(r.t.row(2).to_vec(), r.pi_cat);
    }

    #[test]
    fn drops_idle_physicians_and_rejects_empty() {
        let ds = SymptomDataset::new(names("d", 2), names("s", 1), vec![Yes, No]).unwrap();
        let codes =
            PhysicianCodes::new(names("g", 2), names("p", 2), vec![vec![(1, 0)], vec![(1, 1)]]).unwrap();
        let r = em_debias(&ds, &codes, EmOptions::default()).unwrap();
        assert_eq!(r.physicians, vec!["p1".to_string()]);
        assert_eq!(r.theta_bias.dim(), (1, 2, 2));
        let empty = PhysicianCodes::new(names("g", 2), names("p", 1), vec![vec![], vec![]]).unwrap();
        assert!(em_debias(&ds, &empty, EmOptions::default()).is_err());
    }

    struct Synthetic {
        ds: SymptomDataset,
        codes: PhysicianCodes,
        truth: Vec<usize>,
        bias: Vec<Array2<f64>>,
    }

    fn synthesize(bias: Vec<Array2<f64>>, n: usize, s: usize, seed: u64) -> Synthetic {
        let g_n = bias[0].nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Array2<f64> = Array2::from_shape_fn((s, g_n), |_| rng.random_range(0.05..0.95));
        let mut truth = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n * s);
        let mut assignments = Vec::with_capacity(n);
        for _ in 0..n {
            let g = rng.random_range(0..g_n);
            truth.push(g);
            for j in 0..s {
                values.push(if rng.random::<f64>() < p[[j, g]] { Yes } else { No });
            }
            let codes = bias
                .iter()
                .enumerate()
                .map(|(m, b)| {
                    let u: f64 = rng.random();
                    let h = crate::sampler::draw_categorical(b.row(g).as_slice().unwrap(), u);
                    (m, h)
                })
                .collect();
            assignments.push(codes);
        }
        let ds = SymptomDataset::new(names("d", n), names("s", s), values).unwrap();
        let codes = PhysicianCodes::new(names("g", g_n), names("p", bias.len()), assignments).unwrap();
        Synthetic { ds, codes, truth, bias }
    }

    fn noisy_identity(g: usize, diag: f64, shift: usize) -> Array2<f64> {
        Array2::from_shape_fn((g, g), |(a, b)| {
            if a == b {
                diag
            } else if b == (a + shift) % g {
                1.0 - diag
            } else {
                0.0
            }
        })
    }

    #[test]
    fn recovers_known_bias() {
        let bias = vec![
            noisy_identity(3, 0.9, 1),
            noisy_identity(3, 0.8, 2),
            noisy_identity(3, 0.95, 1),
            noisy_identity(3, 0.85, 2),
        ];
        let syn = synthesize(bias, 1500, 20, 21);
        let r = em_debias(&syn.ds, &syn.codes, EmOptions::default()).unwrap();
        assert!(r.converged);
        for w in r.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-8 * w[0].abs().max(1.0));
        }
        for (m, b) in syn.bias.iter().enumerate() {
            for ((g, h), &v) in b.indexed_iter() {
                let est = r.theta_bias[[m, g, h]];
                assert!((est - v).abs() <= 0.05, "physician {m} ({g},{h}): {est} vs {v}");
            }
        }
        let confident = syn
            .truth
            .iter()
            .enumerate()
            .filter(|&(i, &g)| r.t[[i, g]] >= 0.8)
            .count();
        assert!(confident as f64 >= 0.8 * syn.truth.len() as f64);
        for row in r.t.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        assert!((r.pi_cat.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unbiased_physicians_have_strong_diagonals() {
        let bias = vec![noisy_identity(3, 1.0, 1); 4];
        let syn = synthesize(bias, 600, 10, 22);
        let r = em_debias(&syn.ds, &syn.codes, EmOptions::default()).unwrap();
        for m in 0..4 {
            for g in 0..3 {
                assert!(r.theta_bias[[m, g, g]] >= 0.95);
            }
        }
    }
}
