use std::path::Path;

use anyhow::Result;
use insilico::ingest::{self, format_float};
use insilico::physician::{em_debias, DebiasResult, EmOptions};
use insilico::SymptomDataset;

use super::{categories_or_default, ensure_dir};
use crate::args::DebiasArgs;
use crate::manifest::ManifestBuilder;

/// Writes `tweights.csv` and `bias_matrices.csv`.
pub fn write_debias(out: &Path, ds: &SymptomDataset, categories: &[String], d: &DebiasResult) -> Result<()> {
    ingest::write_matrix(out.join("tweights.csv"), "id", ds.death_ids(), categories, &d.t)?;
    let header: Vec<String> = ["physician", "from_category", "to_category", "value"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for (m, name) in d.physicians.iter().enumerate() {
        for (g, from) in categories.iter().enumerate() {
            for (h, to) in categories.iter().enumerate() {
                rows.push(vec![
                    name.clone(),
                    from.clone(),
                    to.clone(),
                    format_float(d.theta_bias[[m, g, h]]),
                ]);
            }
        }
    }
    ingest::write_table(out.join("bias_matrices.csv"), &header, &rows)?;
    Ok(())
}

pub fn run(a: &DebiasArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("debias", a)?;
    let ds = ingest::load_symptoms(&a.symptoms)?;
    manifest.input(&a.symptoms)?;
    let categories = categories_or_default(&a.categories);
    let codes = ingest::load_physician_codes(&a.physician, &categories, &ds)?;
    manifest.input(&a.physician)?;
    let d = em_debias(
        &ds,
        &codes,
        EmOptions {
            max_iter: a.em_max_iter,
            tol: a.em_tol,
        },
    )?;
    if !d.converged {
        log::warn!("EM stopped after {} iterations without converging", d.iterations);
    }
    ensure_dir(&a.out)?;
    write_debias(&a.out, &ds, &categories, &d)?;
    manifest.note("em_iterations", d.iterations)?;
    manifest.note("em_converged", d.converged)?;
    manifest.note("log_likelihood", d.log_likelihood.last().copied())?;
    manifest.finish(&a.out)
}
