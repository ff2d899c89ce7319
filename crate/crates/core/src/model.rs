//! Domain types shared by every stage of the pipeline, plus the two pure
//! probability kernels (softmax CSMF map and the naive Bayes cause
//! posterior) that the sampler and the baselines are built on.

use std::collections::HashSet;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Number of ordinal grades in the expert ranking alphabet.
pub const NUM_LEVELS: usize = 15;

/// Boundary grades are clamped to `[PROB_EPS, 1 - PROB_EPS]` wherever they
/// are used as probabilities.
pub const PROB_EPS: f64 = 1e-6;

/// Grade labels, highest tendency first.
pub const GRADE_LABELS: [&str; NUM_LEVELS] = [
    "I", "A+", "A", "A-", "B+", "B", "B-", "C+", "C", "C-", "D+", "D", "D-", "E", "N",
];

/// Conventional letter-grade to probability translation used by InterVA.
pub const INTERVA_VALUES: [f64; NUM_LEVELS] = [
    1.0, 0.8, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001, 0.0005, 0.0001, 0.00001, 0.0,
];

/// A single verbal autopsy response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymptomValue {
    Yes,
    No,
    Missing,
}

impl SymptomValue {
    pub fn is_observed(self) -> bool {
        self != SymptomValue::Missing
    }
}

/// N deaths by S symptoms, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymptomDataset {
    death_ids: Vec<String>,
    symptoms: Vec<String>,
    values: Vec<SymptomValue>,
}

impl SymptomDataset {
    pub fn new(
        death_ids: Vec<String>,
        symptoms: Vec<String>,
        values: Vec<SymptomValue>,
    ) -> Result<Self> {
        check_unique("death", &death_ids)?;
        check_unique("symptom", &symptoms)?;
        if values.len() != death_ids.len() * symptoms.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} deaths x {} symptoms",
                values.len(),
                death_ids.len(),
                symptoms.len()
            )));
        }
        Ok(Self {
            death_ids,
            symptoms,
            values,
        })
    }

    pub fn n_deaths(&self) -> usize {
        self.death_ids.len()
    }

    pub fn n_symptoms(&self) -> usize {
        self.symptoms.len()
    }

    pub fn death_ids(&self) -> &[String] {
        &self.death_ids
    }

    pub fn symptoms(&self) -> &[String] {
        &self.symptoms
    }

    pub fn row(&self, i: usize) -> &[SymptomValue] {
        let s = self.symptoms.len();
        &self.values[i * s..(i + 1) * s]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[SymptomValue]> {
        (0..self.n_deaths()).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> SymptomValue {
        self.values[i * self.symptoms.len() + j]
    }

    /// Position of a death id, if present.
    pub fn death_index(&self, id: &str) -> Option<usize> {
        self.death_ids.iter().position(|d| d == id)
    }

    /// Builds a new dataset from the given rows. Rows may repeat; `ids`
    /// supplies the identifiers of the new rows and must be unique.
    pub fn select_rows(&self, rows: &[usize], ids: Vec<String>) -> Result<Self> {
        if rows.len() != ids.len() {
            return Err(Error::Dimension(format!(
                "{} rows selected but {} ids supplied",
                rows.len(),
                ids.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * self.n_symptoms());
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self::new(ids, self.symptoms.clone(), values)
    }

    /// Same deaths restricted to the named symptom columns, in that order.
    pub fn select_symptoms(&self, names: &[String]) -> Result<Self> {
        let cols = names
            .iter()
            .map(|n| {
                self.symptoms
                    .iter()
                    .position(|s| s == n)
                    .ok_or_else(|| Error::Dimension(format!("unknown symptom `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(self.n_deaths() * cols.len());
        for row in self.rows() {
            values.extend(cols.iter().map(|&c| row[c]));
        }
        Self::new(self.death_ids.clone(), names.to_vec(), values)
    }
}

/// The ordered 15-grade alphabet and the probability attached to each grade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelAlphabet {
    values: [f64; NUM_LEVELS],
}

impl Default for LevelAlphabet {
    fn default() -> Self {
        Self {
            values: INTERVA_VALUES,
        }
    }
}

impl LevelAlphabet {
    /// Custom grade values; must lie in `[0, 1]` and be strictly decreasing.
    pub fn from_values(values: [f64; NUM_LEVELS]) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(
                "grade values must lie in [0, 1]".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument(
                "grade values must be strictly decreasing".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64; NUM_LEVELS] {
        &self.values
    }

    pub fn value(&self, grade: usize) -> f64 {
        self.values[grade]
    }

    /// Grade values clamped away from 0 and 1, still strictly decreasing.
    pub fn clamped_values(&self) -> [f64; NUM_LEVELS] {
        let mut out = self.values.map(clamp_prob);
        separate_decreasing(&mut out, PROB_EPS, 1.0 - PROB_EPS, 1e-9);
        out
    }

    pub fn label(grade: usize) -> &'static str {
        GRADE_LABELS[grade]
    }

    /// Parses a grade label. Accepts both ASCII `-` and the typographic
    /// minus sign.
    pub fn grade_index(label: &str) -> Option<usize> {
        let norm = label.trim().replace('\u{2212}', "-");
        GRADE_LABELS.iter().position(|g| *g == norm)
    }
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Forces `values` to be strictly decreasing inside `[lo, hi]` with at
/// least `gap` between neighbours, moving entries as little as possible.
/// Returns true when anything had to move.
pub(crate) fn separate_decreasing(values: &mut [f64], lo: f64, hi: f64, gap: f64) -> bool {
    let before = values.to_vec();
    let n = values.len();
    for v in values.iter_mut() {
        *v = v.clamp(lo, hi);
    }
    for t in 1..n {
        if values[t] > values[t - 1] - gap {
            values[t] = values[t - 1] - gap;
        }
    }
    if values[n - 1] < lo {
        values[n - 1] = lo;
        for t in (0..n - 1).rev() {
            if values[t] < values[t + 1] + gap {
                values[t] = values[t + 1] + gap;
            }
        }
    }
    values.iter().zip(&before).any(|(a, b)| a != b)
}

/// S x C matrix of grade indices plus the symptom and cause names it is
/// keyed by.
#[derive(Debug, Clone, PartialEq)]
pub struct RankMatrix {
    symptoms: Vec<String>,
    causes: Vec<String>,
    grades: Vec<u8>,
}

impl RankMatrix {
    pub fn new(symptoms: Vec<String>, causes: Vec<String>, grades: Vec<u8>) -> Result<Self> {
        check_unique("symptom", &symptoms)?;
        check_unique("cause", &causes)?;
        if grades.len() != symptoms.len() * causes.len() {
            return Err(Error::Dimension(format!(
                "{} grades for {} symptoms x {} causes",
                grades.len(),
                symptoms.len(),
                causes.len()
            )));
        }
        if let Some(g) = grades.iter().find(|&&g| g as usize >= NUM_LEVELS) {
            return Err(Error::InvalidArgument(format!("grade index {g} out of range")));
        }
        Ok(Self {
            symptoms,
            causes,
            grades,
        })
    }

    pub fn n_symptoms(&self) -> usize {
        self.symptoms.len()
    }

    pub fn n_causes(&self) -> usize {
        self.causes.len()
    }

    pub fn symptoms(&self) -> &[String] {
        &self.symptoms
    }

    pub fn causes(&self) -> &[String] {
        &self.causes
    }

    pub fn grade(&self, symptom: usize, cause: usize) -> usize {
        self.grades[symptom * self.causes.len() + cause] as usize
    }

    /// Grades in row-major (symptom, cause) order.
    pub fn grades(&self) -> &[u8] {
        &self.grades
    }

    /// Expands per-grade values into an S x C conditional probability matrix.
    pub fn expand(&self, level_values: &[f64; NUM_LEVELS]) -> Array2<f64> {
        Array2::from_shape_fn((self.n_symptoms(), self.n_causes()), |(j, c)| {
            level_values[self.grade(j, c)]
        })
    }

    /// Reorders rows to follow `symptoms`; every name must be present.
    pub fn align_symptoms(&self, symptoms: &[String]) -> Result<Self> {
        let c = self.n_causes();
        let mut grades = Vec::with_capacity(symptoms.len() * c);
        for name in symptoms {
            let j = self
                .symptoms
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| {
                    Error::Dimension(format!("symptom `{name}` is missing from the probbase"))
                })?;
            grades.extend_from_slice(&self.grades[j * c..(j + 1) * c]);
        }
        Self::new(symptoms.to_vec(), self.causes.clone(), grades)
    }

    /// Removes the named causes. Unknown names are an error.
    pub fn drop_causes(&self, names: &[String]) -> Result<Self> {
        for n in names {
            if !self.causes.contains(n) {
                return Err(Error::InvalidArgument(format!("unknown cause `{n}`")));
            }
        }
        let keep: Vec<usize> = (0..self.n_causes())
            .filter(|&k| !names.contains(&self.causes[k]))
            .collect();
        if keep.len() < 2 {
            return Err(Error::InvalidArgument(
                "at least two causes must remain".into(),
            ));
        }
        let mut grades = Vec::with_capacity(self.n_symptoms() * keep.len());
        for j in 0..self.n_symptoms() {
            grades.extend(keep.iter().map(|&k| self.grades[j * self.n_causes() + k]));
        }
        let causes = keep.iter().map(|&k| self.causes[k].clone()).collect();
        Self::new(self.symptoms.clone(), causes, grades)
    }
}

/// Prior on the softmax-parameterised CSMF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CsmfPrior {
    /// `theta_c ~ N(mu, sigma2)` with flat hyperpriors; mu and sigma2 are
    /// resampled every sweep.
    Hierarchical,
    /// `theta_c ~ N(mu, sigma2)` with both held fixed.
    Fixed { mu: f64, sigma2: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    /// Pseudo-count scale `M` of the per-grade Beta priors.
    pub prior_strength: f64,
    /// Per-grade Beta shape; `alpha[t] / prior_strength` is the prior mean.
    pub alpha: [f64; NUM_LEVELS],
    /// Initial standard deviation of the random-walk proposal on theta.
    pub jump_sigma: f64,
    /// Tune `jump_sigma` during burn-in.
    pub adapt_jump: bool,
    pub n_iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub n_chains: usize,
    pub seed: u64,
    pub csmf_prior: CsmfPrior,
}

impl HyperParams {
    /// Prior means taken from the (clamped) alphabet values.
    pub fn from_alphabet(alphabet: &LevelAlphabet, prior_strength: f64) -> Self {
        let alpha = alphabet.clamped_values().map(|v| v * prior_strength);
        Self {
            prior_strength,
            alpha,
            jump_sigma: 0.1,
            adapt_jump: true,
            n_iterations: 10_000,
            burn_in: 5_000,
            thin: 20,
            n_chains: 3,
            seed: 1,
            csmf_prior: CsmfPrior::Hierarchical,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.prior_strength > 0.0 && self.prior_strength.is_finite()) {
            return bad("prior strength must be positive");
        }
        if self
            .alpha
            .iter()
            .any(|&a| !(a > 0.0 && a < self.prior_strength))
        {
            return bad("every alpha must lie strictly between 0 and the prior strength");
        }
        if !(self.jump_sigma > 0.0 && self.jump_sigma.is_finite()) {
            return bad("jump sigma must be positive");
        }
        if self.n_iterations == 0 || self.thin == 0 || self.n_chains == 0 {
            return bad("iterations, thin and chains must be positive");
        }
        if self.burn_in >= self.n_iterations {
            return bad("burn-in must be smaller than the number of iterations");
        }
        if let CsmfPrior::Fixed { mu, sigma2 } = self.csmf_prior {
            if !mu.is_finite() || !(sigma2 > 0.0 && sigma2.is_finite()) {
                return bad("fixed CSMF prior needs finite mu and positive sigma2");
            }
        }
        Ok(())
    }

    /// Number of draws kept per chain.
    pub fn retained_per_chain(&self) -> usize {
        (self.burn_in + 1..=self.n_iterations)
            .filter(|&it| self.is_retained(it))
            .count()
    }

    /// Whether 1-based iteration `it` is kept.
    pub fn is_retained(&self, it: usize) -> bool {
        it > self.burn_in && (it - self.burn_in - 1).is_multiple_of(self.thin)
    }
}

/// Current per-grade probabilities; all cells of a grade share one value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondProbState {
    pub level_values: [f64; NUM_LEVELS],
}

impl CondProbState {
    pub fn from_alphabet(alphabet: &LevelAlphabet) -> Self {
        Self {
            level_values: alphabet.clamped_values(),
        }
    }

    pub fn is_strictly_ordered(&self) -> bool {
        self.level_values.windows(2).all(|w| w[0] > w[1])
            && self.level_values[0] <= 1.0 - PROB_EPS
            && self.level_values[NUM_LEVELS - 1] >= PROB_EPS
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsmfState {
    pub theta: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
    pub pi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl CsmfState {
    /// Uniform start: theta = 0, mu = 0, sigma2 = 1.
    pub fn uniform(n_causes: usize) -> Self {
        Self {
            theta: vec![0.0; n_causes],
            mu: 0.0,
            sigma2: 1.0,
            pi: vec![1.0 / n_causes as f64; n_causes],
            counts: vec![0; n_causes],
        }
    }

    pub fn refresh_pi(&mut self) {
        softmax_into(&self.theta, &mut self.pi);
    }
}

/// `exp(theta_c) / sum_k exp(theta_k)`.
pub fn softmax_csmf(theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() < 2 {
        return Err(Error::InvalidArgument(
            "softmax needs at least two causes".into(),
        ));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("theta must be finite".into()));
    }
    let mut out = vec![0.0; theta.len()];
    softmax_into(theta, &mut out);
    Ok(out)
}

pub(crate) fn softmax_into(theta: &[f64], out: &mut [f64]) {
    let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &t) in out.iter_mut().zip(theta) {
        *o = (t - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalises log weights in place into probabilities. Returns false when
/// every weight is zero.
pub(crate) fn normalize_log_weights(weights: &mut [f64]) -> bool {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return false;
    }
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    true
}

/// Naive Bayes posterior over causes for one death. MISSING symptoms
/// contribute no factor. `cond_probs` is S x C with entries in (0, 1).
pub fn naive_bayes_posterior(
    row: &[SymptomValue],
    pi: &[f64],
    cond_probs: &Array2<f64>,
) -> Result<Vec<f64>> {
    let (s, c) = cond_probs.dim();
    if row.len() != s || pi.len() != c {
        return Err(Error::Dimension(format!(
            "row has {} symptoms and pi {} causes, cond_probs is {s} x {c}",
            row.len(),
            pi.len()
        )));
    }
    if cond_probs.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::InvalidArgument(
            "conditional probabilities must lie in (0, 1)".into(),
        ));
    }
    let mut out: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
    for (j, v) in row.iter().enumerate() {
        let probs = cond_probs.row(j);
        match v {
            SymptomValue::Yes => out.iter_mut().zip(probs).for_each(|(o, p)| *o += p.ln()),
            SymptomValue::No => out.iter_mut().zip(probs).for_each(|(o, p)| *o += (-p).ln_1p()),
            SymptomValue::Missing => {}
        }
    }
    if !normalize_log_weights(&mut out) {
        return Err(Error::InvalidArgument("prior has no positive mass".into()));
    }
    Ok(out)
}

fn check_unique(kind: &'static str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    use SymptomValue::*;

    #[test]
    fn softmax_symmetric_and_analytic() {
        let p = softmax_csmf(&[0.0, 0.0, 0.0]).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax_csmf(&[2f64.ln(), 0.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(softmax_csmf(&[0.0, f64::NAN]).is_err());
        assert!(softmax_csmf(&[f64::INFINITY, 0.0]).is_err());
        assert!(softmax_csmf(&[1.0]).is_err());
    }

    #[test]
    fn softmax_survives_large_inputs() {
        let p = softmax_csmf(&[1000.0, 999.0]).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[0] > p[1]);
    }

    #[test]
    fn nb_identical_columns_is_uniform() {
        let probs = array![[0.3, 0.3], [0.9, 0.9]];
        let p = naive_bayes_posterior(&[Yes, No], &[0.5, 0.5], &probs).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nb_hand_example() {
        let probs = array![[0.8, 0.1], [0.6, 0.3]];
        let p = naive_bayes_posterior(&[Yes, No], &[0.5, 0.5], &probs).unwrap();
        assert!((p[0] - 32.0 / 39.0).abs() < 1e-12);
        assert!((p[1] - 7.0 / 39.0).abs() < 1e-12);
    }

    #[test]
    fn nb_all_missing_returns_prior() {
        let probs = array![[0.8, 0.1], [0.6, 0.3]];
        let p = naive_bayes_posterior(&[Missing, Missing], &[0.7, 0.3], &probs).unwrap();
        assert!((p[0] - 0.7).abs() < 1e-15 && (p[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn nb_rejects_boundary_probs() {
        let probs = array![[1.0, 0.1]];
        assert!(naive_bayes_posterior(&[Yes], &[0.5, 0.5], &probs).is_err());
    }

    #[test]
    fn dataset_validation() {
        let ids = vec!["a".to_string(), "a".to_string()];
        let err = SymptomDataset::new(ids, vec!["s".into()], vec![Yes, No]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { .. }));
        let err = SymptomDataset::new(vec!["a".into()], vec!["s".into()], vec![]).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn alphabet_defaults_and_labels() {
        let a = LevelAlphabet::default();
        assert_eq!(a.value(0), 1.0);
        assert_eq!(a.value(14), 0.0);
        assert!(a.values().windows(2).all(|w| w[0] > w[1]));
        assert_eq!(LevelAlphabet::grade_index("A\u{2212}"), Some(3));
        assert_eq!(LevelAlphabet::grade_index("B+"), Some(4));
        assert_eq!(LevelAlphabet::grade_index("Z"), None);
        let c = a.clamped_values();
        assert_eq!(c[0], 1.0 - PROB_EPS);
        assert_eq!(c[14], PROB_EPS);
        assert!(c.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn separation_handles_ties_at_the_top() {
        let mut v = [1.0; NUM_LEVELS];
        assert!(separate_decreasing(&mut v, 0.0, 1.0, 1e-6));
        assert!(v.windows(2).all(|w| w[0] > w[1]));
        let mut v = [0.0; NUM_LEVELS];
        separate_decreasing(&mut v, 0.0, 1.0, 1e-6);
        assert!(v.windows(2).all(|w| w[0] > w[1]));
        assert!(v[NUM_LEVELS - 1] >= 0.0);
    }

    #[test]
    fn retention_arithmetic() {
        let mut h = HyperParams::from_alphabet(&LevelAlphabet::default(), 1.0);
        h.n_iterations = 10;
        h.burn_in = 5;
        h.thin = 2;
        let kept: Vec<usize> = (1..=10).filter(|&i| h.is_retained(i)).collect();
        assert_eq!(kept, vec![6, 8, 10]);
        assert_eq!(h.retained_per_chain(), 3);
    }

    #[test]
    fn hyper_validation() {
        let mut h = HyperParams::from_alphabet(&LevelAlphabet::default(), 2.0);
        assert!(h.validate().is_ok());
        h.burn_in = h.n_iterations;
        assert!(h.validate().is_err());
        let mut h = HyperParams::from_alphabet(&LevelAlphabet::default(), 2.0);
        h.alpha[3] = 2.0;
        assert!(h.validate().is_err());
    }

    fn direct_nb(row: &[SymptomValue], pi: &[f64], probs: &Array2<f64>) -> Vec<f64> {
        let mut w: Vec<f64> = pi.to_vec();
        for (j, v) in row.iter().enumerate() {
            for (c, wc) in w.iter_mut().enumerate() {
                match v {
                    Yes => *wc *= probs[[j, c]],
                    No => *wc *= 1.0 - probs[[j, c]],
                    Missing => {}
                }
            }
        }
        let t: f64 = w.iter().sum();
        w.iter().map(|x| x / t).collect()
    }

    fn value_strategy() -> impl Strategy<Value = SymptomValue> {
        prop_oneof![Just(Yes), Just(No), Just(Missing)]
    }

    proptest! {
        #[test]
        fn softmax_shift_invariant(theta in prop::collection::vec(-20.0f64..20.0, 2..12), k in -50.0f64..50.0) {
            let a = softmax_csmf(&theta).unwrap();
            let shifted: Vec<f64> = theta.iter().map(|t| t + k).collect();
            let b = softmax_csmf(&shifted).unwrap();
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn nb_log_space_matches_direct(
            (s, c, probs, row, raw_pi) in (1usize..=10, 2usize..=5).prop_flat_map(|(s, c)| (
                Just(s), Just(c),
                prop::collection::vec(0.01f64..0.99, s * c),
                prop::collection::vec(value_strategy(), s),
                prop::collection::vec(0.05f64..1.0, c),
            ))
        ) {
            let probs = Array2::from_shape_vec((s, c), probs).unwrap();
            let total: f64 = raw_pi.iter().sum();
            let pi: Vec<f64> = raw_pi.iter().map(|p| p / total).collect();
            let a = naive_bayes_posterior(&row, &pi, &probs).unwrap();
            let b = direct_nb(&row, &pi, &probs);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn missing_equals_dropped_column(
            (s, c, probs, row, drop) in (2usize..=8, 2usize..=4).prop_flat_map(|(s, c)| (
                Just(s), Just(c),
                prop::collection::vec(0.01f64..0.99, s * c),
                prop::collection::vec(value_strategy(), s),
                0..s,
            ))
        ) {
            let probs = Array2::from_shape_vec((s, c), probs).unwrap();
            let pi = vec![1.0 / c as f64; c];
            let mut masked = row.clone();
            masked[drop] = Missing;
            let a = naive_bayes_posterior(&masked, &pi, &probs).unwrap();
            let keep: Vec<usize> = (0..s).filter(|&j| j != drop).collect();
            let reduced = probs.select(ndarray::Axis(0), &keep);
            let reduced_row: Vec<SymptomValue> = keep.iter().map(|&j| row[j]).collect();
            let b = naive_bayes_posterior(&reduced_row, &pi, &reduced).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
