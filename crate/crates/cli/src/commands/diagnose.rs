use std::collections::BTreeMap;

use anyhow::Result;
use insilico::ingest::{self, format_float};
use insilico::sampler::gelman_rubin;
use insilico::Error;

use super::{ensure_dir, fit::PSRF_WARN};
use crate::args::DiagnoseArgs;
use crate::manifest::{ManifestBuilder, PsrfSummary};

/// Per cause, one series per chain.
type CauseSeries = Vec<Vec<Vec<f64>>>;

/// Per-cause series grouped by chain, in order of first appearance.
fn read_draws(path: &std::path::Path) -> Result<(Vec<String>, CauseSeries)> {
    let (header, rows) = ingest::load_table(path)?;
    if header.len() < 3 || header[0] != "chain" || header[1] != "iteration" {
        return Err(Error::InvalidArgument(format!(
            "{}: expected columns chain,iteration,<cause...>",
            path.display()
        ))
        .into());
    }
    let causes = header[2..].to_vec();
    let mut chain_ids: Vec<String> = Vec::new();
    let mut series: Vec<Vec<Vec<f64>>> = vec![Vec::new(); causes.len()];
    for (n, r) in rows.iter().enumerate() {
        let ch = match chain_ids.iter().position(|c| c == &r[0]) {
            Some(i) => i,
            None => {
                chain_ids.push(r[0].clone());
                series.iter_mut().for_each(|s| s.push(Vec::new()));
                chain_ids.len() - 1
            }
        };
        for (k, cell) in r[2..].iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::InvalidArgument(format!("{}: row {}: bad number `{cell}`", path.display(), n + 2))
            })?;
            series[k][ch].push(v);
        }
    }
    Ok((causes, series))
}

pub fn run(a: &DiagnoseArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("diagnose", a)?;
    let (causes, series) = read_draws(&a.draws)?;
    manifest.input(&a.draws)?;
    let psrf = series.iter().map(|s| gelman_rubin(s)).collect::<insilico::Result<Vec<f64>>>()?;
    println!("cause\tpsrf");
    for (c, r) in causes.iter().zip(&psrf) {
        let flag = if *r < PSRF_WARN { "" } else { "\tWARNING" };
        println!("{c}\t{r:.4}{flag}");
    }
    let max = psrf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("max\t{max:.4}");
    if !(max < PSRF_WARN) {
        log::warn!("maximum PSRF {max:.4} exceeds {PSRF_WARN}");
    }
    if let Some(out) = &a.out {
        ensure_dir(out)?;
        let rows: Vec<Vec<String>> = causes
            .iter()
            .zip(&psrf)
            .map(|(c, r)| vec![c.clone(), format_float(*r)])
            .collect();
        ingest::write_table(out.join("psrf.csv"), &["cause".to_string(), "psrf".to_string()], &rows)?;
        manifest.psrf(PsrfSummary {
            max,
            per_cause: causes.iter().cloned().zip(psrf.iter().copied()).collect::<BTreeMap<_, _>>(),
        });
        manifest.finish(out)?;
    }
    Ok(())
}
