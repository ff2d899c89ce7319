use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal};
use rayon::prelude::*;

use super::draws::{ChainDraws, PosteriorDraws};
use super::tbeta::sample_truncated_beta;
use crate::error::{Error, Result};
use crate::interva::interva_propensity;
use crate::model::{
    log_sum_exp, normalize_log_weights, CondProbState, CsmfPrior, CsmfState, HyperParams,
    LevelAlphabet, RankMatrix, SymptomDataset, SymptomValue, NUM_LEVELS, PROB_EPS,
};

/// Floor used when every theta equals mu exactly.
pub const SIGMA2_FLOOR: f64 = 1e-8;
const ADAPT_WINDOW: usize = 100;
const MIN_PAR_DEATHS: usize = 64;

/// Sufficient statistics of the level step: YES and NO observations
/// falling on cells of each grade under the current assignment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LevelCounts {
    pub yes: [f64; NUM_LEVELS],
    pub no: [f64; NUM_LEVELS],
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub y: Vec<usize>,
    pub levels: CondProbState,
    pub csmf: CsmfState,
    pub rng: ChaCha8Rng,
    /// Key of the counter-based generator used by the cause step.
    pub y_key: [u8; 32],
    /// Completed sweeps.
    pub iteration: usize,
    pub jump_sigma: f64,
    pub accepted: u64,
    pub proposed: u64,
}

impl ChainState {
    /// True when counts match `y`, levels are strictly ordered and pi is
    /// on the simplex.
    pub fn is_consistent(&self) -> bool {
        let mut counts = vec![0usize; self.csmf.counts.len()];
        for &k in &self.y {
            counts[k] += 1;
        }
        counts == self.csmf.counts
            && self.levels.is_strictly_ordered()
            && (self.csmf.pi.iter().sum::<f64>() - 1.0).abs() < 1e-12
            && self.csmf.pi.iter().all(|&p| p > 0.0)
    }
}

/// Output of one chain before pooling.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: ChainDraws,
    /// Sum over retained sweeps of each death's cause probabilities.
    pub individual_sum: Array2<f64>,
}

/// Metropolis-within-Gibbs sampler over cause assignments, shared grade
/// probabilities and the softmax CSMF.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    dataset: &'a SymptomDataset,
    rank: &'a RankMatrix,
    hyper: &'a HyperParams,
    init_levels: [f64; NUM_LEVELS],
    /// Per (death, cause): YES then NO counts by grade.
    tally: Vec<u16>,
    cause_log_weights: Option<Vec<Option<Vec<f64>>>>,
}

const TALLY_STRIDE: usize = 2 * NUM_LEVELS;

impl<'a> Sampler<'a> {
    pub fn new(
        dataset: &'a SymptomDataset,
        rank: &'a RankMatrix,
        alphabet: &LevelAlphabet,
        hyper: &'a HyperParams,
    ) -> Result<Self> {
        hyper.validate()?;
        if rank.symptoms() != dataset.symptoms() {
            return Err(Error::Dimension(
                "symptom columns of the data and the probbase differ".into(),
            ));
        }
        if rank.n_causes() < 2 {
            return Err(Error::InvalidArgument("at least two causes are required".into()));
        }
        if dataset.n_symptoms() > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "at most {} symptoms are supported",
                u16::MAX
            )));
        }
        let c = rank.n_causes();
        let mut tally = vec![0u16; dataset.n_deaths() * c * TALLY_STRIDE];
        for (i, row) in dataset.rows().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let off = match v {
                    SymptomValue::Yes => 0,
                    SymptomValue::No => NUM_LEVELS,
                    SymptomValue::Missing => continue,
                };
                for k in 0..c {
                    tally[(i * c + k) * TALLY_STRIDE + off + rank.grade(j, k)] += 1;
                }
            }
        }
        Ok(Self {
            dataset,
            rank,
            hyper,
            init_levels: alphabet.clamped_values(),
            tally,
            cause_log_weights: None,
        })
    }

    /// Per-death non-negative weights multiplying the cause posterior.
    /// Deaths with `None` use the unweighted posterior.
    pub fn with_cause_weights(mut self, weights: Vec<Option<Vec<f64>>>) -> Result<Self> {
        if weights.len() != self.dataset.n_deaths() {
            return Err(Error::Dimension(format!(
                "{} weight rows for {} deaths",
                weights.len(),
                self.dataset.n_deaths()
            )));
        }
        let c = self.rank.n_causes();
        let mut logs = Vec::with_capacity(weights.len());
        for w in weights {
            logs.push(match w {
                None => None,
                Some(w) => {
                    if w.len() != c || w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                        return Err(Error::InvalidArgument(
                            "cause weights must be finite, non-negative and one per cause".into(),
                        ));
                    }
                    Some(w.iter().map(|x| x.ln()).collect())
                }
            });
        }
        self.cause_log_weights = Some(logs);
        Ok(self)
    }

    pub fn n_causes(&self) -> usize {
        self.rank.n_causes()
    }

    pub fn hyper(&self) -> &HyperParams {
        self.hyper
    }

    fn tally(&self, death: usize, cause: usize) -> &[u16] {
        let off = (death * self.n_causes() + cause) * TALLY_STRIDE;
        &self.tally[off..off + TALLY_STRIDE]
    }

    /// Starting state: theta = 0, levels at the clamped alphabet values and
    /// causes drawn from the InterVA propensities.
    pub fn init_chain(&self, chain: usize) -> ChainState {
        let c = self.n_causes();
        let mut rng = ChaCha8Rng::seed_from_u64(self.hyper.seed);
        rng.set_stream(chain as u64);
        let y_key: [u8; 32] = rng.random();
        let p_sc = self.rank.expand(&self.init_levels);
        let uniform = vec![1.0 / c as f64; c];
        let y: Vec<usize> = self
            .dataset
            .rows()
            .map(|row| {
                let u: f64 = rng.random();
                match interva_propensity(row, &uniform, &p_sc)
                    .expect("dimensions checked at construction")
                    .as_slice()
                {
                    Some(p) => draw_categorical(p, u),
                    None => ((u * c as f64) as usize).min(c - 1),
                }
            })
            .collect();
        let mut csmf = CsmfState::uniform(c);
        if let CsmfPrior::Fixed { mu, sigma2 } = self.hyper.csmf_prior {
            csmf.mu = mu;
            csmf.sigma2 = sigma2;
        }
        for &k in &y {
            csmf.counts[k] += 1;
        }
        ChainState {
            y,
            levels: CondProbState {
                level_values: self.init_levels,
            },
            csmf,
            rng,
            y_key,
            iteration: 0,
            jump_sigma: self.hyper.jump_sigma,
            accepted: 0,
            proposed: 0,
        }
    }

    /// Grade-level YES/NO totals under assignment `y`.
    pub fn level_counts(&self, y: &[usize]) -> LevelCounts {
        let mut out = LevelCounts::default();
        for (i, &k) in y.iter().enumerate() {
            let t = self.tally(i, k);
            for g in 0..NUM_LEVELS {
                out.yes[g] += t[g] as f64;
                out.no[g] += t[NUM_LEVELS + g] as f64;
            }
        }
        out
    }

    /// Cause posterior of one death under the given state, written into
    /// `out`. Uses the cause weights when the death has them.
    pub fn cause_posterior(
        &self,
        death: usize,
        ln_pi: &[f64],
        ln_p: &[f64; NUM_LEVELS],
        ln_q: &[f64; NUM_LEVELS],
        out: &mut [f64],
    ) {
        for (k, o) in out.iter_mut().enumerate() {
            let t = self.tally(death, k);
            let mut acc = ln_pi[k];
            for g in 0..NUM_LEVELS {
                acc += t[g] as f64 * ln_p[g] + t[NUM_LEVELS + g] as f64 * ln_q[g];
            }
            *o = acc;
        }
        if let Some(Some(lw)) = self.cause_log_weights.as_ref().map(|w| &w[death]) {
            let plain: Vec<f64> = out.to_vec();
            out.iter_mut().zip(lw).for_each(|(o, w)| *o += w);
            if !normalize_log_weights(out) {
                log::warn!(
                    "death `{}`: cause weights exclude every cause, using the unweighted posterior",
                    self.dataset.death_ids()[death]
                );
                out.copy_from_slice(&plain);
                normalize_log_weights(out);
            }
        } else {
            normalize_log_weights(out);
        }
    }

    /// Redraws every cause assignment from its conditional posterior. When
    /// `record` is given the per-death probabilities are added to it.
    pub fn sample_y(&self, st: &mut ChainState, record: Option<&mut Array2<f64>>) {
        let c = self.n_causes();
        let ln_pi: Vec<f64> = st.csmf.pi.iter().map(|p| p.ln()).collect();
        let ln_p = st.levels.level_values.map(f64::ln);
        let ln_q = st.levels.level_values.map(|v| (-v).ln_1p());
        let key = st.y_key;
        let stream = st.iteration as u64;
        let draw = |i: usize, buf: &mut [f64]| -> usize {
            self.cause_posterior(i, &ln_pi, &ln_p, &ln_q, buf);
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream(stream);
            rng.set_word_pos(2 * i as u128);
            draw_categorical(buf, rng.random())
        };
        match record {
            Some(rec) => {
                let rec = rec.as_slice_mut().expect("standard layout");
                st.y
                    .par_iter_mut()
                    .zip(rec.par_chunks_mut(c))
                    .enumerate()
                    .with_min_len(MIN_PAR_DEATHS)
                    .for_each_init(
                        || vec![0.0; c],
                        |buf, (i, (yi, row))| {
                            *yi = draw(i, buf);
                            row.iter_mut().zip(buf.iter()).for_each(|(r, b)| *r += b);
                        },
                    );
            }
            None => {
                st.y
                    .par_iter_mut()
                    .enumerate()
                    .with_min_len(MIN_PAR_DEATHS)
                    .for_each_init(|| vec![0.0; c], |buf, (i, yi)| *yi = draw(i, buf));
            }
        }
        st.csmf.counts.iter_mut().for_each(|n| *n = 0);
        for &k in &st.y {
            st.csmf.counts[k] += 1;
        }
    }

    /// One full sweep: levels, causes, mu, sigma2, theta.
    pub fn step(&self, st: &mut ChainState, record: Option<&mut Array2<f64>>) {
        let counts = self.level_counts(&st.y);
        sample_levels(&mut st.levels, &counts, self.hyper, &mut st.rng);
        self.sample_y(st, record);
        if self.hyper.csmf_prior == CsmfPrior::Hierarchical {
            st.csmf.mu = sample_mu(&st.csmf, &mut st.rng);
            st.csmf.sigma2 = sample_sigma2(&st.csmf, &mut st.rng);
        }
        let acc = sample_theta(&mut st.csmf, st.jump_sigma, &mut st.rng);
        st.accepted += acc as u64;
        st.proposed += st.csmf.theta.len() as u64;
        st.iteration += 1;
    }

    pub fn run_chain(&self, chain: usize) -> ChainOutput {
        let h = self.hyper;
        let (n, c) = (self.dataset.n_deaths(), self.n_causes());
        let mut st = self.init_chain(chain);
        let mut individual_sum = Array2::zeros((n, c));
        let kept = h.retained_per_chain();
        let mut draws = ChainDraws {
            iterations: Vec::with_capacity(kept),
            pi: Vec::with_capacity(kept),
            levels: Vec::with_capacity(kept),
            acceptance_rate: 0.0,
            jump_sigma: st.jump_sigma,
        };
        let (mut win_acc, mut win_prop) = (0u64, 0u64);
        let (mut post_acc, mut post_prop) = (0u64, 0u64);
        for it in 1..=h.n_iterations {
            let before = (st.accepted, st.proposed);
            let keep = h.is_retained(it);
            self.step(&mut st, keep.then_some(&mut individual_sum));
            let (da, dp) = (st.accepted - before.0, st.proposed - before.1);
            if it <= h.burn_in {
                win_acc += da;
                win_prop += dp;
                if h.adapt_jump && it % ADAPT_WINDOW == 0 {
                    let rate = win_acc as f64 / win_prop as f64;
                    if rate > 0.5 {
                        st.jump_sigma *= 2.0;
                    } else if rate < 0.2 {
                        st.jump_sigma /= 2.0;
                    }
                    log::debug!(
                        "chain {chain} sweep {it}: acceptance {rate:.3}, jump sigma {}",
                        st.jump_sigma
                    );
                    win_acc = 0;
                    win_prop = 0;
                }
            } else {
                post_acc += da;
                post_prop += dp;
            }
            if keep {
                debug_assert!(st.is_consistent());
                draws.iterations.push(it);
                draws.pi.push(st.csmf.pi.clone());
                draws.levels.push(st.levels.level_values);
            }
        }
        draws.acceptance_rate = if post_prop > 0 {
            post_acc as f64 / post_prop as f64
        } else {
            0.0
        };
        draws.jump_sigma = st.jump_sigma;
        log::info!(
            "chain {chain}: {} draws kept, theta acceptance {:.3}",
            draws.pi.len(),
            draws.acceptance_rate
        );
        ChainOutput {
            draws,
            individual_sum,
        }
    }

    /// Runs all chains in parallel and pools them.
    pub fn run(&self) -> PosteriorDraws {
        let outputs: Vec<ChainOutput> = (0..self.hyper.n_chains)
            .into_par_iter()
            .map(|ch| self.run_chain(ch))
            .collect();
        PosteriorDraws::from_chains(
            self.rank.causes().to_vec(),
            self.dataset.death_ids().to_vec(),
            outputs,
        )
    }
}

/// Fits the model without physician information.
pub fn fit(
    dataset: &SymptomDataset,
    rank: &RankMatrix,
    alphabet: &LevelAlphabet,
    hyper: &HyperParams,
) -> Result<PosteriorDraws> {
    Ok(Sampler::new(dataset, rank, alphabet, hyper)?.run())
}

/// Index of the first cumulative probability exceeding `u`.
pub(crate) fn draw_categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Updates grades from highest to lowest, each from its Beta full
/// conditional truncated between its neighbours.
pub fn sample_levels<R: Rng + ?Sized>(
    levels: &mut CondProbState,
    counts: &LevelCounts,
    hyper: &HyperParams,
    rng: &mut R,
) {
    let v = &mut levels.level_values;
    let m = hyper.prior_strength;
    for t in 0..NUM_LEVELS {
        let lo = if t + 1 < NUM_LEVELS { v[t + 1] } else { PROB_EPS };
        let hi = if t > 0 { v[t - 1] } else { 1.0 - PROB_EPS };
        let a = hyper.alpha[t] + counts.yes[t];
        let b = m - hyper.alpha[t] + counts.no[t];
        match sample_truncated_beta(a, b, lo, hi, rng) {
            Some(x) => v[t] = x,
            None => log::warn!("grade {t}: truncation interval ({lo}, {hi}) is empty, keeping {}", v[t]),
        }
    }
    debug_assert!(levels.is_strictly_ordered());
}

/// `mu ~ N(mean(theta), sigma2 / C)`.
pub fn sample_mu<R: Rng + ?Sized>(csmf: &CsmfState, rng: &mut R) -> f64 {
    let c = csmf.theta.len() as f64;
    let mean = csmf.theta.iter().sum::<f64>() / c;
    let sd = (csmf.sigma2 / c).sqrt();
    Normal::new(mean, sd)
        .expect("finite mean and standard deviation")
        .sample(rng)
}

/// `sigma2 = (C - 1) s^2 / X` with `X ~ chi^2(C - 1)` and
/// `s^2 = sum (theta - mu)^2 / C`.
pub fn sample_sigma2<R: Rng + ?Sized>(csmf: &CsmfState, rng: &mut R) -> f64 {
    let c = csmf.theta.len() as f64;
    let s2 = csmf.theta.iter().map(|t| (t - csmf.mu).powi(2)).sum::<f64>() / c;
    if s2 == 0.0 {
        log::warn!("theta has no spread around mu; sigma2 set to {SIGMA2_FLOOR}");
        return SIGMA2_FLOOR;
    }
    let x = ChiSquared::new(c - 1.0)
        .expect("at least two causes")
        .sample(rng);
    ((c - 1.0) * s2 / x).max(f64::MIN_POSITIVE)
}

/// Component-wise random-walk Metropolis sweep over theta. Returns the
/// number of accepted proposals.
pub fn sample_theta<R: Rng + ?Sized>(csmf: &mut CsmfState, jump_sigma: f64, rng: &mut R) -> usize {
    let n_total: f64 = csmf.counts.iter().sum::<usize>() as f64;
    let step = Normal::new(0.0, jump_sigma).expect("positive jump sigma");
    let mut lse = log_sum_exp(&csmf.theta);
    let mut accepted = 0;
    for k in 0..csmf.theta.len() {
        let old = csmf.theta[k];
        let prop = old + step.sample(rng);
        csmf.theta[k] = prop;
        let lse_new = log_sum_exp(&csmf.theta);
        let log_ratio = csmf.counts[k] as f64 * (prop - old) - n_total * (lse_new - lse)
            - ((prop - csmf.mu).powi(2) - (old - csmf.mu).powi(2)) / (2.0 * csmf.sigma2);
        let u: f64 = rng.random();
        if u.ln() < log_ratio {
            lse = lse_new;
            accepted += 1;
        } else {
            csmf.theta[k] = old;
        }
    }
    csmf.refresh_pi();
    accepted
}
