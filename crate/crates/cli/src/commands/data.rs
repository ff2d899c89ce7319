use anyhow::Result;
use insilico::eval::{
    dirichlet_resample_split, empirical_cond_probs, random_rank_matrix, random_split, rankify_default,
    rankify_quantile, simulate_dataset, LabeledDataset,
};
use insilico::ingest;
use insilico::LevelAlphabet;

use super::ensure_dir;
use crate::args::{PriorArg, RankifyArgs, SimulateArgs, SplitArgs};
use crate::manifest::ManifestBuilder;
use crate::UsageError;

fn load_labeled(
    symptoms: &std::path::Path,
    labels: &std::path::Path,
    causes: Option<&[String]>,
    manifest: &mut ManifestBuilder,
) -> Result<LabeledDataset> {
    let ds = ingest::load_symptoms(symptoms)?;
    manifest.input(symptoms)?;
    let (labels_v, causes) = ingest::load_labels(labels, &ds, causes)?;
    manifest.input(labels)?;
    Ok(LabeledDataset::new(ds, labels_v, causes)?)
}

fn write_labeled(out: &std::path::Path, prefix: &str, l: &LabeledDataset) -> Result<()> {
    ingest::write_symptoms(out.join(format!("{prefix}symptoms.csv")), &l.dataset)?;
    ingest::write_labels(
        out.join(format!("{prefix}labels.csv")),
        l.dataset.death_ids(),
        &l.labels,
        &l.causes,
    )?;
    Ok(())
}

pub fn split(a: &SplitArgs) -> Result<()> {
    if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        return Err(UsageError("--test-fraction must lie strictly between 0 and 1".into()).into());
    }
    let mut manifest = ManifestBuilder::new("split", a)?;
    manifest.seed(a.seed);
    let labeled = load_labeled(&a.symptoms, &a.labels, None, &mut manifest)?;
    ensure_dir(&a.out)?;
    if a.dirichlet {
        let s = dirichlet_resample_split(&labeled, a.test_fraction, a.concentration, a.seed)?;
        write_labeled(&a.out, "train_", &s.train)?;
        write_labeled(&a.out, "test_", &s.test)?;
        ingest::write_csmf(a.out.join("target_csmf.csv"), &s.test.causes, &s.target_csmf)?;
    } else {
        let (train, test) = random_split(&labeled, a.test_fraction, a.seed)?;
        write_labeled(&a.out, "train_", &train)?;
        write_labeled(&a.out, "test_", &test)?;
    }
    manifest.finish(&a.out)
}

/// Offset separating the probbase stream from the data stream.
const PROBBASE_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    if !(0.0..1.0).contains(&a.missing_rate) {
        return Err(UsageError("--missing-rate must lie in [0, 1)".into()).into());
    }
    let mut manifest = ManifestBuilder::new("simulate", a)?;
    manifest.seed(a.seed);
    let (rank, default_alphabet) = match &a.probbase {
        Some(p) => {
            manifest.input(p)?;
            ingest::load_probbase(p)?
        }
        None => (
            random_rank_matrix(a.n_symptoms, a.n_causes, a.seed.wrapping_add(PROBBASE_SEED_OFFSET))?,
            LevelAlphabet::default(),
        ),
    };
    let alphabet = match &a.alphabet {
        Some(p) => {
            manifest.input(p)?;
            ingest::load_alphabet(p)?
        }
        None => default_alphabet,
    };
    let c = rank.n_causes();
    let raw = match (&a.pi, &a.csmf) {
        (Some(v), _) => v.clone(),
        (None, Some(p)) => {
            manifest.input(p)?;
            ingest::load_csmf(p, rank.causes())?
        }
        (None, None) => vec![1.0; c],
    };
    if raw.len() != c {
        return Err(UsageError(format!("{} cause fractions given for {c} causes", raw.len())).into());
    }
    let total: f64 = raw.iter().sum();
    if raw.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || !(total > 0.0) {
        return Err(UsageError("cause fractions must be non-negative with a positive sum".into()).into());
    }
    let pi: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let labeled = simulate_dataset(&pi, &alphabet, &rank, a.n, a.seed, a.missing_rate)?;
    ensure_dir(&a.out)?;
    write_labeled(&a.out, "", &labeled)?;
    ingest::write_csmf(a.out.join("truth_csmf.csv"), rank.causes(), &pi)?;
    ingest::write_probbase(a.out.join("probbase.csv"), &rank)?;
    ingest::write_alphabet(a.out.join("alphabet.csv"), &alphabet)?;
    manifest.finish(&a.out)
}

pub fn rankify(a: &RankifyArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("rankify", a)?;
    let reference = match &a.reference {
        Some(p) => {
            manifest.input(p)?;
            Some(ingest::load_probbase(p)?.0)
        }
        None if a.mode == PriorArg::Quantile => {
            return Err(UsageError("--mode quantile needs --reference".into()).into())
        }
        None => None,
    };
    let causes = reference.as_ref().map(|r| r.causes().to_vec());
    let train = load_labeled(&a.symptoms, &a.labels, causes.as_deref(), &mut manifest)?;
    let emp = empirical_cond_probs(&train);
    if !emp.empty_causes.is_empty() {
        let names: Vec<&str> = emp.empty_causes.iter().map(|&k| train.causes[k].as_str()).collect();
        log::warn!("no training deaths for {}", names.join(", "));
    }
    if !emp.empty_cells.is_empty() {
        log::warn!("{} symptom-cause cells have no observed answer", emp.empty_cells.len());
    }
    let symptoms = train.dataset.symptoms();
    let (rank, alphabet) = match (a.mode, &reference) {
        (PriorArg::Quantile, Some(r)) => {
            let q = rankify_quantile(&emp.probs, symptoms, &train.causes, r)?;
            if q.degenerate {
                log::warn!("quantile grade values were separated to keep them strictly decreasing");
            }
            manifest.note("degenerate", q.degenerate)?;
            (q.rank, q.alphabet)
        }
        _ => (rankify_default(&emp.probs, symptoms, &train.causes)?, LevelAlphabet::default()),
    };
    ensure_dir(&a.out)?;
    ingest::write_probbase(a.out.join("probbase.csv"), &rank)?;
    ingest::write_alphabet(a.out.join("alphabet.csv"), &alphabet)?;
    manifest.finish(&a.out)
}
