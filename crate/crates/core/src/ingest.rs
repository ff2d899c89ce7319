//! Readers and writers for the CSV interchange formats, plus the
//! `key = value` run configuration file.
//!
//! All tables are comma separated UTF-8 with a mandatory header row.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{
    HyperParams, LevelAlphabet, RankMatrix, SymptomDataset, SymptomValue, NUM_LEVELS,
};
use crate::physician::{CauseCategories, PhysicianCodes};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_reader<R: Read>(rdr: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(rdr)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Header fields and data records, with 1-based line numbers attached.
struct Table {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

fn read_table<R: Read>(rdr: R, path: &Path, min_cols: usize) -> Result<Table> {
    let mut rdr = csv_reader(rdr);
    let header: Vec<String> = rdr
        .headers()
        .map_err(csv_err(path))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < min_cols || header.iter().all(String::is_empty) {
        return Err(Error::parse(
            path,
            1,
            format!("header needs at least {min_cols} columns"),
        ));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        rows.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(Table { header, rows })
}

pub fn load_symptoms(path: impl AsRef<Path>) -> Result<SymptomDataset> {
    let path = path.as_ref();
    read_symptoms(open(path)?, path)
}

/// Parses a symptom table: `id,<symptom...>` with cells `Y`, `N`, `.` or
/// empty (the last two meaning missing).
pub fn read_symptoms<R: Read>(rdr: R, path: &Path) -> Result<SymptomDataset> {
    let table = read_table(rdr, path, 1)?;
    let symptoms = table.header[1..].to_vec();
    let mut ids = Vec::with_capacity(table.rows.len());
    let mut values = Vec::with_capacity(table.rows.len() * symptoms.len());
    for (line, rec) in &table.rows {
        ids.push(rec[0].clone());
        for (j, cell) in rec[1..].iter().enumerate() {
            let v = match cell.as_str() {
                "Y" => SymptomValue::Yes,
                "N" => SymptomValue::No,
                "." | "" => SymptomValue::Missing,
                other => {
                    return Err(Error::parse(
                        path,
                        *line,
                        format!(
                            "death `{}`, symptom `{}`: unknown value `{other}`",
                            rec[0], symptoms[j]
                        ),
                    ))
                }
            };
            values.push(v);
        }
    }
    let ds = SymptomDataset::new(ids, symptoms, values)?;
    log::info!(
        "{}: {} deaths x {} symptoms",
        path.display(),
        ds.n_deaths(),
        ds.n_symptoms()
    );
    Ok(ds)
}

pub fn write_symptoms(path: impl AsRef<Path>, ds: &SymptomDataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = csv_err(path);
    let mut header = vec!["id".to_string()];
    header.extend(ds.symptoms().iter().cloned());
    w.write_record(&header).map_err(&err)?;
    for (id, row) in ds.death_ids().iter().zip(ds.rows()) {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(id.as_str());
        rec.extend(row.iter().map(|v| match v {
            SymptomValue::Yes => "Y",
            SymptomValue::No => "N",
            SymptomValue::Missing => ".",
        }));
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn load_probbase(path: impl AsRef<Path>) -> Result<(RankMatrix, LevelAlphabet)> {
    let path = path.as_ref();
    read_probbase(open(path)?, path)
}

/// Parses `symptom,<cause...>` with letter-grade cells.
pub fn read_probbase<R: Read>(rdr: R, path: &Path) -> Result<(RankMatrix, LevelAlphabet)> {
    let table = read_table(rdr, path, 2)?;
    let causes = table.header[1..].to_vec();
    let mut symptoms = Vec::with_capacity(table.rows.len());
    let mut grades = Vec::with_capacity(table.rows.len() * causes.len());
    for (line, rec) in &table.rows {
        symptoms.push(rec[0].clone());
        for (k, cell) in rec[1..].iter().enumerate() {
            let g = LevelAlphabet::grade_index(cell).ok_or_else(|| {
                Error::parse(
                    path,
                    *line,
                    format!(
                        "symptom `{}`, cause `{}`: unknown grade `{cell}`",
                        rec[0], causes[k]
                    ),
                )
            })?;
            grades.push(g as u8);
        }
    }
    Ok((
        RankMatrix::new(symptoms, causes, grades)?,
        LevelAlphabet::default(),
    ))
}

pub fn write_probbase(path: impl AsRef<Path>, rank: &RankMatrix) -> Result<()> {
    let path = path.as_ref();
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["symptom".to_string()];
    header.extend(rank.causes().iter().cloned());
    w.write_record(&header).map_err(&err)?;
    for (j, s) in rank.symptoms().iter().enumerate() {
        let mut rec = vec![s.as_str()];
        rec.extend((0..rank.n_causes()).map(|k| LevelAlphabet::label(rank.grade(j, k))));
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a `grade,value` table covering all 15 grades.
pub fn load_alphabet(path: impl AsRef<Path>) -> Result<LevelAlphabet> {
    let path = path.as_ref();
    let table = read_table(open(path)?, path, 2)?;
    let mut values = [f64::NAN; NUM_LEVELS];
    for (line, rec) in &table.rows {
        let g = LevelAlphabet::grade_index(&rec[0])
            .ok_or_else(|| Error::parse(path, *line, format!("unknown grade `{}`", rec[0])))?;
        values[g] = rec[1]
            .parse()
            .map_err(|_| Error::parse(path, *line, format!("bad value `{}`", rec[1])))?;
    }
    if let Some(g) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::parse(
            path,
            0,
            format!("grade `{}` has no value", LevelAlphabet::label(g)),
        ));
    }
    LevelAlphabet::from_values(values)
}

pub fn write_alphabet(path: impl AsRef<Path>, alphabet: &LevelAlphabet) -> Result<()> {
    let path = path.as_ref();
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["grade", "value"]).map_err(&err)?;
    for (g, v) in alphabet.values().iter().enumerate() {
        w.write_record([LevelAlphabet::label(g), &format_float(*v)])
            .map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads `death_id,physician_id,category` rows. Deaths absent from the file
/// are left uncoded.
pub fn load_physician_codes(
    path: impl AsRef<Path>,
    categories: &[String],
    dataset: &SymptomDataset,
) -> Result<PhysicianCodes> {
    let path = path.as_ref();
    let table = read_table(open(path)?, path, 3)?;
    let index: HashMap<&str, usize> = dataset
        .death_ids()
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i))
        .collect();
    let mut physicians: Vec<String> = Vec::new();
    let mut assignments = vec![Vec::new(); dataset.n_deaths()];
    for (line, rec) in &table.rows {
        let death = *index.get(rec[0].as_str()).ok_or_else(|| {
            Error::parse(
                path,
                *line,
                format!("death `{}` is not in the symptom data", rec[0]),
            )
        })?;
        let cat = categories
            .iter()
            .position(|c| c == &rec[2])
            .ok_or_else(|| Error::parse(path, *line, format!("unknown category `{}`", rec[2])))?;
        let phys = match physicians.iter().position(|p| p == &rec[1]) {
            Some(p) => p,
            None => {
                physicians.push(rec[1].clone());
                physicians.len() - 1
            }
        };
        assignments[death].push((phys, cat));
    }
    PhysicianCodes::new(categories.to_vec(), physicians, assignments)
}

/// Reads `cause_id,category` rows into the cause-to-category gate.
pub fn load_cause_categories(
    path: impl AsRef<Path>,
    causes: &[String],
    categories: &[String],
) -> Result<CauseCategories> {
    let path = path.as_ref();
    let table = read_table(open(path)?, path, 2)?;
    let mut pairs = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        if !causes.contains(&rec[0]) {
            return Err(Error::parse(path, *line, format!("unknown cause `{}`", rec[0])));
        }
        if !categories.contains(&rec[1]) {
            return Err(Error::parse(
                path,
                *line,
                format!("unknown category `{}`", rec[1]),
            ));
        }
        pairs.push((rec[0].clone(), rec[1].clone()));
    }
    CauseCategories::from_pairs(causes, categories, &pairs)
}

/// Reads `id,cause` labels aligned to the dataset's death order. When
/// `causes` is `None` the cause list is taken from the file in order of
/// first appearance.
pub fn load_labels(
    path: impl AsRef<Path>,
    dataset: &SymptomDataset,
    causes: Option<&[String]>,
) -> Result<(Vec<usize>, Vec<String>)> {
    let path = path.as_ref();
    let table = read_table(open(path)?, path, 2)?;
    let mut cause_list: Vec<String> = causes.map(<[String]>::to_vec).unwrap_or_default();
    let index: HashMap<&str, usize> = dataset
        .death_ids()
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i))
        .collect();
    let mut labels = vec![usize::MAX; dataset.n_deaths()];
    for (line, rec) in &table.rows {
        let i = *index
            .get(rec[0].as_str())
            .ok_or_else(|| Error::parse(path, *line, format!("unknown death `{}`", rec[0])))?;
        let k = match cause_list.iter().position(|c| c == &rec[1]) {
            Some(k) => k,
            None if causes.is_none() => {
                cause_list.push(rec[1].clone());
                cause_list.len() - 1
            }
            None => {
                return Err(Error::parse(path, *line, format!("unknown cause `{}`", rec[1])))
            }
        };
        if labels[i] != usize::MAX {
            return Err(Error::DuplicateId {
                kind: "label",
                id: rec[0].clone(),
            });
        }
        labels[i] = k;
    }
    if let Some(i) = labels.iter().position(|&l| l == usize::MAX) {
        return Err(Error::parse(
            path,
            0,
            format!("death `{}` has no label", dataset.death_ids()[i]),
        ));
    }
    Ok((labels, cause_list))
}

pub fn write_labels(
    path: impl AsRef<Path>,
    ids: &[String],
    labels: &[usize],
    causes: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["id", "cause"]).map_err(&err)?;
    for (id, &l) in ids.iter().zip(labels) {
        w.write_record([id.as_str(), causes[l].as_str()])
            .map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a `cause,value` vector in the order of `causes`. Causes missing
/// from the file get zero.
pub fn load_csmf(path: impl AsRef<Path>, causes: &[String]) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let table = read_table(open(path)?, path, 2)?;
    let mut out = vec![0.0; causes.len()];
    for (line, rec) in &table.rows {
        let k = causes
            .iter()
            .position(|c| c == &rec[0])
            .ok_or_else(|| Error::parse(path, *line, format!("unknown cause `{}`", rec[0])))?;
        out[k] = rec[1]
            .parse()
            .map_err(|_| Error::parse(path, *line, format!("bad value `{}`", rec[1])))?;
    }
    Ok(out)
}

pub fn write_csmf(path: impl AsRef<Path>, causes: &[String], values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["cause", "csmf"]).map_err(&err)?;
    for (c, v) in causes.iter().zip(values) {
        w.write_record([c.as_str(), &format_float(*v)])
            .map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes a header row followed by string records.
pub fn write_table(path: impl AsRef<Path>, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let path = path.as_ref();
    let err = csv_err(path);
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(&err)?;
    for r in rows {
        w.write_record(r).map_err(&err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a header-bearing table as strings.
pub fn load_table(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let path = path.as_ref();
    let t = read_table(open(path)?, path, 1)?;
    Ok((t.header, t.rows.into_iter().map(|(_, r)| r).collect()))
}

/// Numeric matrix with named rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedMatrix {
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
    pub values: Array2<f64>,
}

/// Reads a matrix whose first column holds row names.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<NamedMatrix> {
    let path = path.as_ref();
    let t = read_table(open(path)?, path, 2)?;
    let col_names = t.header[1..].to_vec();
    let mut row_names = Vec::with_capacity(t.rows.len());
    let mut values = Vec::with_capacity(t.rows.len() * col_names.len());
    for (line, rec) in &t.rows {
        row_names.push(rec[0].clone());
        for cell in &rec[1..] {
            values.push(
                cell.parse::<f64>()
                    .map_err(|_| Error::parse(path, *line, format!("bad number `{cell}`")))?,
            );
        }
    }
    let values = Array2::from_shape_vec((row_names.len(), col_names.len()), values)
        .expect("row lengths checked");
    Ok(NamedMatrix {
        row_names,
        col_names,
        values,
    })
}

/// Writes a matrix with a leading row-name column headed `corner`.
pub fn write_matrix(
    path: impl AsRef<Path>,
    corner: &str,
    row_names: &[String],
    col_names: &[String],
    values: &Array2<f64>,
) -> Result<()> {
    if values.dim() != (row_names.len(), col_names.len()) {
        return Err(Error::Dimension(format!(
            "matrix is {:?} but {} row and {} column names were given",
            values.dim(),
            row_names.len(),
            col_names.len()
        )));
    }
    let header: Vec<String> = std::iter::once(corner.to_string())
        .chain(col_names.iter().cloned())
        .collect();
    let rows: Vec<Vec<String>> = row_names
        .iter()
        .zip(values.rows())
        .map(|(name, row)| {
            std::iter::once(name.clone())
                .chain(row.iter().map(|v| format_float(*v)))
                .collect()
        })
        .collect();
    write_table(path, &header, &rows)
}

/// Shortest round-trip representation, in exponent form for very small or
/// very large magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are ignored.
pub fn parse_config_file(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    let rdr = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (n, line) in rdr.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, n + 1, "expected `key = value`"))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::parse(path, n + 1, "empty key"));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn write_config_file<W: Write>(mut w: W, pairs: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in pairs {
        writeln!(w, "{k} = {v}")?;
    }
    Ok(())
}

/// How per-grade prior means are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorMode {
    /// Conventional InterVA grade values.
    Default,
    /// Values induced from empirical quantiles (supplied as an alphabet file).
    Quantile,
}

impl std::str::FromStr for PriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(PriorMode::Default),
            "quantile" => Ok(PriorMode::Quantile),
            other => Err(Error::InvalidArgument(format!(
                "prior mode must be `default` or `quantile`, got `{other}`"
            ))),
        }
    }
}

/// Fully resolved inputs for a `fit` run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub symptoms: PathBuf,
    pub probbase: PathBuf,
    pub alphabet: Option<PathBuf>,
    pub physician: Option<PathBuf>,
    pub cause_categories: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub prior: PriorMode,
    pub hyper: HyperParams,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let inputs = [Some(&self.symptoms), Some(&self.probbase)]
            .into_iter()
            .chain([
                self.alphabet.as_ref(),
                self.physician.as_ref(),
                self.cause_categories.as_ref(),
            ])
            .flatten();
        for p in inputs {
            if !p.exists() {
                return Err(Error::InvalidArgument(format!(
                    "input file {} does not exist",
                    p.display()
                )));
            }
        }
        if self.prior == PriorMode::Quantile && self.alphabet.is_none() {
            return Err(Error::InvalidArgument(
                "quantile prior needs an alphabet file".into(),
            ));
        }
        self.hyper.validate()
    }
}
