use anyhow::Result;
use insilico::eval::{chance_corrected_concordance, confusion_matrix, csmf_accuracy, top_k_accuracy};
use insilico::ingest::{self, format_float};
use insilico::SymptomDataset;

use super::ensure_dir;
use crate::args::EvaluateArgs;
use crate::manifest::ManifestBuilder;
use crate::UsageError;

fn argmax(row: ndarray::ArrayView1<f64>) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best })
        .0
}

pub fn run(a: &EvaluateArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("evaluate", a)?;
    let ind = ingest::load_matrix(&a.individual)?;
    manifest.input(&a.individual)?;
    let causes = ind.col_names.clone();
    let c = causes.len();
    if a.top_k == 0 || a.top_k > c {
        return Err(UsageError(format!("--top-k must lie in 1..={c}")).into());
    }
    let ids_only = SymptomDataset::new(ind.row_names.clone(), Vec::new(), Vec::new())?;
    let (labels, _) = ingest::load_labels(&a.labels, &ids_only, Some(&causes))?;
    manifest.input(&a.labels)?;

    let est = match &a.csmf {
        Some(p) => {
            manifest.input(p)?;
            ingest::load_csmf(p, &causes)?
        }
        None => {
            let n = ind.values.nrows().max(1) as f64;
            ind.values.sum_axis(ndarray::Axis(0)).iter().map(|s| s / n).collect()
        }
    };
    let truth = match &a.truth_csmf {
        Some(p) => {
            manifest.input(p)?;
            ingest::load_csmf(p, &causes)?
        }
        None => {
            let mut t = vec![0.0; c];
            labels.iter().for_each(|&l| t[l] += 1.0);
            let n = labels.len().max(1) as f64;
            t.iter_mut().for_each(|x| *x /= n);
            t
        }
    };

    let assigned: Vec<usize> = ind.values.rows().into_iter().map(argmax).collect();
    let acc = csmf_accuracy(&est, &truth)?;
    let top1 = top_k_accuracy(&ind.values, &labels, 1)?;
    let topk = top_k_accuracy(&ind.values, &labels, a.top_k)?;
    let ccc = chance_corrected_concordance(&assigned, &labels, c)?;
    let conf = confusion_matrix(&assigned, &labels, c)?;

    let mut rows = vec![
        vec!["csmf_accuracy".to_string(), format_float(acc)],
        vec!["top1_accuracy".to_string(), format_float(top1)],
        vec![format!("top{}_accuracy", a.top_k), format_float(topk)],
        vec!["ccc_mean".to_string(), format_float(ccc.mean)],
    ];
    for (name, v) in causes.iter().zip(&ccc.per_cause) {
        if let Some(v) = v {
            rows.push(vec![format!("ccc:{name}"), format_float(*v)]);
        }
    }
    ensure_dir(&a.out)?;
    ingest::write_table(
        a.out.join("metrics.csv"),
        &["metric".to_string(), "value".to_string()],
        &rows,
    )?;
    ingest::write_matrix(a.out.join("confusion.csv"), "assigned\\true", &causes, &causes, &conf)?;
    println!("csmf_accuracy\t{acc:.4}");
    println!("top1_accuracy\t{top1:.4}");
    println!("top{}_accuracy\t{topk:.4}", a.top_k);
    println!("ccc_mean\t{:.4}", ccc.mean);
    manifest.finish(&a.out)
}
