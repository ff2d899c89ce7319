use ndarray::Array2;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{separate_decreasing, LevelAlphabet, RankMatrix, SymptomValue, INTERVA_VALUES, NUM_LEVELS, PROB_EPS};

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalProbs {
    /// S x C share of YES among observed answers.
    pub probs: Array2<f64>,
    /// Cells with no observed answer, set to 0.
    pub empty_cells: Vec<(usize, usize)>,
    /// Causes without any training death.
    pub empty_causes: Vec<usize>,
}

/// Raw `P(s | c)` tallied from labeled deaths; MISSING answers are skipped.
pub fn empirical_cond_probs(train: &LabeledDataset) -> EmpiricalProbs {
    let (s, c) = (train.dataset.n_symptoms(), train.n_causes());
    let mut yes = Array2::<f64>::zeros((s, c));
    let mut seen = Array2::<f64>::zeros((s, c));
    let mut per_cause = vec![0usize; c];
    for (row, &k) in train.dataset.rows().zip(&train.labels) {
        per_cause[k] += 1;
        for (j, v) in row.iter().enumerate() {
            if v.is_observed() {
                seen[[j, k]] += 1.0;
                if *v == SymptomValue::Yes {
                    yes[[j, k]] += 1.0;
                }
            }
        }
    }
    let mut empty_cells = Vec::new();
    let probs = Array2::from_shape_fn((s, c), |(j, k)| {
        if seen[[j, k]] > 0.0 {
            yes[[j, k]] / seen[[j, k]]
        } else {
            empty_cells.push((j, k));
            0.0
        }
    });
    let empty_causes: Vec<usize> = (0..c).filter(|&k| per_cause[k] == 0).collect();
    for &k in &empty_causes {
        log::warn!("cause `{}` has no training deaths", train.causes[k]);
    }
    if !empty_cells.is_empty() {
        log::warn!("{} symptom-cause cells have no observed answers", empty_cells.len());
    }
    EmpiricalProbs {
        probs,
        empty_cells,
        empty_causes,
    }
}

/// Maps each probability to the nearest default grade value; ties go to
/// the higher grade.
pub fn rankify_default(emp: &Array2<f64>, symptoms: &[String], causes: &[String]) -> Result<RankMatrix> {
    check_probs(emp, symptoms, causes)?;
    let grades = emp.iter().map(|&p| nearest_grade(p)).collect();
    RankMatrix::new(symptoms.to_vec(), causes.to_vec(), grades)
}

fn nearest_grade(p: f64) -> u8 {
    let mut best = (0usize, f64::INFINITY);
    for (t, v) in INTERVA_VALUES.iter().enumerate() {
        let d = (p - v).abs();
        if d < best.1 - TIE_TOL {
            best = (t, d);
        }
    }
    best.0 as u8
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRanking {
    pub rank: RankMatrix,
    pub alphabet: LevelAlphabet,
    /// Some grade values had to be moved apart to stay strictly decreasing.
    pub degenerate: bool,
}

/// Assigns grades to empirical cells so that grade shares match the
/// reference matrix, then sets each grade's value to the median of its
/// cells.
pub fn rankify_quantile(
    emp: &Array2<f64>,
    symptoms: &[String],
    causes: &[String],
    reference: &RankMatrix,
) -> Result<QuantileRanking> {
    check_probs(emp, symptoms, causes)?;
    let n_ref = reference.grades().len();
    if n_ref == 0 {
        return Err(Error::InvalidArgument("reference rank matrix is empty".into()));
    }
    let mut ref_counts = [0usize; NUM_LEVELS];
    for &g in reference.grades() {
        ref_counts[g as usize] += 1;
    }
    let cells: Vec<f64> = emp.iter().copied().collect();
    let k = cells.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| cells[b].total_cmp(&cells[a]));

    let mut grades = vec![0u8; k];
    let mut values = [f64::NAN; NUM_LEVELS];
    let mut cum = 0usize;
    let mut start = 0usize;
    for t in 0..NUM_LEVELS {
        cum += ref_counts[t];
        let end = ((cum as f64 / n_ref as f64) * k as f64).round() as usize;
        let members = &order[start..end];
        for &cell in members {
            grades[cell] = t as u8;
        }
        if !members.is_empty() {
            let mut vals: Vec<f64> = members.iter().map(|&c| cells[c]).collect();
            vals.sort_by(f64::total_cmp);
            let m = vals.len();
            values[t] = if m % 2 == 1 {
                vals[m / 2]
            } else {
                0.5 * (vals[m / 2 - 1] + vals[m / 2])
            };
        }
        start = end;
    }
    fill_empty_grades(&mut values);
    let degenerate = separate_decreasing(&mut values, 0.0, 1.0, PROB_EPS);
    if degenerate {
        log::warn!("quantile grade values were not strictly decreasing and were separated");
    }
    Ok(QuantileRanking {
        rank: RankMatrix::new(symptoms.to_vec(), causes.to_vec(), grades)?,
        alphabet: LevelAlphabet::from_values(values)?,
        degenerate,
    })
}

/// Grades with no cells get values interpolated between their nearest
/// populated neighbours; 1 and 0 anchor the ends.
fn fill_empty_grades(values: &mut [f64; NUM_LEVELS]) {
    if values[0].is_nan() {
        values[0] = 1.0;
    }
    if values[NUM_LEVELS - 1].is_nan() {
        values[NUM_LEVELS - 1] = 0.0;
    }
    let mut t = 1;
    while t < NUM_LEVELS {
        if values[t].is_nan() {
            let a = t - 1;
            let b = (t..NUM_LEVELS).find(|&u| !values[u].is_nan()).expect("last grade set");
            for u in t..b {
                let w = (u - a) as f64 / (b - a) as f64;
                values[u] = values[a] + w * (values[b] - values[a]);
            }
            t = b;
        }
        t += 1;
    }
}

fn check_probs(emp: &Array2<f64>, symptoms: &[String], causes: &[String]) -> Result<()> {
    if emp.dim() != (symptoms.len(), causes.len()) {
        return Err(Error::Dimension(format!(
            "probability matrix is {:?} but {} symptoms and {} causes were named",
            emp.dim(),
            symptoms.len(),
            causes.len()
        )));
    }
    if emp.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidArgument("probabilities must lie in [0, 1]".into()));
    }
    Ok(())
}
