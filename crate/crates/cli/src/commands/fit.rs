use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use anyhow::{Context, Result};
use insilico::ingest::{self, format_float};
use insilico::physician::{fit_with_physicians, CauseCategories, EmOptions};
use insilico::sampler::{fit, PosteriorDraws};
use insilico::{CsmfPrior, HyperParams, LevelAlphabet, RankMatrix, SymptomDataset};

use super::{categories_or_default, debias::write_debias, ensure_dir};
use crate::args::{FitArgs, PriorArg};
use crate::manifest::{ChainSummary, ManifestBuilder, PsrfSummary};
use crate::UsageError;

pub const PSRF_WARN: f64 = 1.1;

fn hyper_params(a: &FitArgs, alphabet: &LevelAlphabet) -> HyperParams {
    let mut h = HyperParams::from_alphabet(alphabet, a.prior_strength);
    h.n_iterations = a.iterations;
    h.burn_in = a.burn_in;
    h.thin = a.thin;
    h.n_chains = a.chains;
    h.seed = a.seed;
    h.jump_sigma = a.jump_sigma;
    h.adapt_jump = !a.no_adapt;
    if let (Some(mu), Some(sigma2)) = (a.fixed_mu, a.fixed_sigma2) {
        h.csmf_prior = CsmfPrior::Fixed { mu, sigma2 };
    }
    h
}

fn load_gate(a: &FitArgs, rank: &RankMatrix, categories: &[String]) -> Result<CauseCategories> {
    let path = a.cause_categories.as_ref().expect("required by clap");
    let (_, rows) = ingest::load_table(path)?;
    let dropped = a.drop_causes.as_deref().unwrap_or_default();
    let pairs: Vec<(String, String)> = rows
        .into_iter()
        .filter(|r| r.len() >= 2 && !dropped.contains(&r[0]))
        .map(|r| (r[0].clone(), r[1].clone()))
        .collect();
    CauseCategories::from_pairs(rank.causes(), categories, &pairs)
        .with_context(|| format!("reading {}", path.display()))
}

pub fn run(a: &FitArgs) -> Result<()> {
    if a.prior == PriorArg::Quantile && a.alphabet.is_none() {
        return Err(UsageError("--prior quantile needs --alphabet".into()).into());
    }
    if a.cause_categories.is_some() && a.physician.is_none() {
        return Err(UsageError("--cause-categories is only used with --physician".into()).into());
    }
    let mut manifest = ManifestBuilder::new("fit", a)?;
    manifest.seed(a.seed);
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
    let hyper = hyper_params(a, &alphabet);
    hyper.validate()?;
    ensure_dir(&a.out)?;

    let draws = match &a.physician {
        Some(phys) => {
            let categories = categories_or_default(&a.categories);
            let codes = ingest::load_physician_codes(phys, &categories, &ds)?;
            manifest.input(phys)?;
            let gate = load_gate(a, &rank, &categories)?;
            manifest.input(a.cause_categories.as_ref().expect("checked"))?;
            let opts = EmOptions {
                max_iter: a.em_max_iter,
                tol: a.em_tol,
            };
            let (draws, debias) = fit_with_physicians(&ds, &rank, &alphabet, &codes, &gate, &hyper, opts)?;
            if let Some(d) = &debias {
                write_debias(&a.out, &ds, &categories, d)?;
                manifest.note("em_iterations", d.iterations)?;
                manifest.note("em_converged", d.converged)?;
            }
            draws
        }
        None => fit(&ds, &rank, &alphabet, &hyper)?,
    };

    write_outputs(a, &ds, &draws, &mut manifest)?;
    manifest.finish(&a.out)
}

fn write_outputs(
    a: &FitArgs,
    ds: &SymptomDataset,
    draws: &PosteriorDraws,
    manifest: &mut ManifestBuilder,
) -> Result<()> {
    let header: Vec<String> = ["cause", "mean", "sd", "q2.5", "q50", "q97.5"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = draws
        .causes
        .iter()
        .zip(draws.csmf_summary())
        .map(|(c, s)| {
            vec![
                c.clone(),
                format_float(s.mean),
                format_float(s.sd),
                format_float(s.q025),
                format_float(s.q50),
                format_float(s.q975),
            ]
        })
        .collect();
    ingest::write_table(a.out.join("csmf.csv"), &header, &rows)?;
    ingest::write_matrix(
        a.out.join("individual.csv"),
        "id",
        ds.death_ids(),
        &draws.causes,
        &draws.individual,
    )?;
    if !a.no_draws {
        write_draws(&a.out.join("draws.csv"), draws)?;
    }

    manifest.chains(
        draws
            .chains
            .iter()
            .enumerate()
            .map(|(i, ch)| ChainSummary {
                chain: i + 1,
                acceptance_rate: ch.acceptance_rate,
                jump_sigma: ch.jump_sigma,
            })
            .collect(),
    );
    let psrf = draws.psrf().ok();
    let mut text = String::new();
    match &psrf {
        Some(values) => {
            writeln!(text, "cause\tpsrf")?;
            for (c, r) in draws.causes.iter().zip(values) {
                writeln!(text, "{c}\t{r:.4}")?;
            }
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max < PSRF_WARN {
                writeln!(text, "max psrf {max:.4}: ok")?;
            } else {
                writeln!(text, "max psrf {max:.4}: WARNING, above {PSRF_WARN}; run longer chains")?;
                log::warn!("maximum PSRF {max:.4} exceeds {PSRF_WARN}");
            }
            manifest.psrf(PsrfSummary {
                max,
                per_cause: draws.causes.iter().cloned().zip(values.iter().copied()).collect::<BTreeMap<_, _>>(),
            });
        }
        None => writeln!(text, "psrf not available: needs at least two chains with two draws each")?,
    }
    writeln!(text, "\nchain\tacceptance\tjump_sigma")?;
    for (i, ch) in draws.chains.iter().enumerate() {
        writeln!(text, "{}\t{:.4}\t{:.6}", i + 1, ch.acceptance_rate, ch.jump_sigma)?;
    }
    fs::write(a.out.join("diagnostics.txt"), text).context("writing diagnostics.txt")?;
    Ok(())
}

pub fn write_draws(path: &std::path::Path, draws: &PosteriorDraws) -> Result<()> {
    let header: Vec<String> = ["chain", "iteration"]
        .iter()
        .map(|s| s.to_string())
        .chain(draws.causes.iter().cloned())
        .collect();
    let mut rows = Vec::new();
    for (c, ch) in draws.chains.iter().enumerate() {
        for (it, pi) in ch.iterations.iter().zip(&ch.pi) {
            let mut r = vec![(c + 1).to_string(), it.to_string()];
            r.extend(pi.iter().map(|v| format_float(*v)));
            rows.push(r);
        }
    }
    ingest::write_table(path, &header, &rows)?;
    Ok(())
}
