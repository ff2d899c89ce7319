use anyhow::Result;
use insilico::ingest;
use insilico::interva::{interva_csmf, Propensity};
use ndarray::Array2;

use super::ensure_dir;
use crate::args::IntervaArgs;
use crate::manifest::ManifestBuilder;
use crate::UsageError;

pub fn run(a: &IntervaArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("interva", a)?;
    let ds = ingest::load_symptoms(&a.symptoms)?;
    manifest.input(&a.symptoms)?;
    let (rank, default_alphabet) = ingest::load_probbase(&a.probbase)?;
    manifest.input(&a.probbase)?;
    let alphabet = match &a.alphabet {
        Some(p) => {
            manifest.input(p)?;
            ingest::load_alphabet(p)?
        }
        None => default_alphabet,
    };
    let rank = match &a.drop_causes {
        Some(names) => rank.drop_causes(names)?,
        None => rank,
    };
    let rank = rank.align_symptoms(ds.symptoms())?;
    let c = rank.n_causes();
    let pi0 = match &a.prior_csmf {
        Some(p) => {
            manifest.input(p)?;
            let v = ingest::load_csmf(p, rank.causes())?;
            if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) || !(v.iter().sum::<f64>() > 0.0) {
                return Err(UsageError("--prior-csmf needs non-negative values with a positive sum".into()).into());
            }
            v
        }
        None => vec![1.0 / c as f64; c],
    };
    let p_sc = rank.expand(alphabet.values());
    let res = interva_csmf(&ds, &pi0, &p_sc)?;

    ensure_dir(&a.out)?;
    let mut props = Array2::<f64>::zeros((ds.n_deaths(), c));
    for (mut row, p) in props.rows_mut().into_iter().zip(&res.propensities) {
        if let Propensity::Determined(v) = p {
            row.iter_mut().zip(v).for_each(|(x, y)| *x = *y);
        }
    }
    ingest::write_matrix(a.out.join("propensities.csv"), "id", ds.death_ids(), rank.causes(), &props)?;
    ingest::write_csmf(a.out.join("csmf.csv"), rank.causes(), &res.csmf)?;
    let undetermined: Vec<&String> = ds
        .death_ids()
        .iter()
        .zip(&res.propensities)
        .filter(|(_, p)| matches!(p, Propensity::Undetermined))
        .map(|(id, _)| id)
        .collect();
    manifest.note("n_undetermined", res.n_undetermined)?;
    manifest.note("undetermined_ids", undetermined)?;
    manifest.finish(&a.out)
}
