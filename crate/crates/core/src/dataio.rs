//! Datasets and on-disk artifacts.
//!
//! Artifact CSV files use a comma separator, LF line endings and a mandatory
//! header. Floating-point values are written with 17 significant digits
//! (`{:.16e}`) so every `f64` reads back bit-identically.
//!
//! | file         | layout                                                    |
//! |--------------|-----------------------------------------------------------|
//! | trace.csv    | `iter,cost,lr,restarts,params_json`                       |
//! | spectrum.csv | `iter,rank,eigenvalue`, rank ascending from 0             |
//! | slice.csv    | `#axes,i,j,range_lo,range_hi,G` then G rows of G values   |
//!
//! `params_json` holds a JSON array and is double-quoted because it contains
//! commas. The JSON mirrors use the same field names.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Exp, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::ansatz::{self, EncodedSample, ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::spectra::LandscapeSlice;
use crate::trainer::{IterRecord, Outcome, TrainingTrace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub min: f64,
    pub max: f64,
}

pub fn compute_stats(features: &[Vec<f64>]) -> Vec<FeatureStats> {
    let Some(first) = features.first() else {
        return Vec::new();
    };
    let mut stats: Vec<FeatureStats> = first.iter().map(|&v| FeatureStats { min: v, max: v }).collect();
    for row in &features[1..] {
        for (s, &v) in stats.iter_mut().zip(row) {
            s.min = s.min.min(v);
            s.max = s.max.max(v);
        }
    }
    stats
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    GeneratedParity,
    Csv { path: String },
    SyntheticTabular { seed: u64 },
    Split { seed: u64, part: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub stats: Vec<FeatureStats>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<u8>,
        provenance: Provenance,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.len() {
            return Err(Error::Dimension {
                expected: features.len(),
                got: labels.len(),
            });
        }
        let width = feature_names.len();
        if width == 0 {
            return Err(Error::InvalidArgument("dataset has no feature columns".into()));
        }
        for (k, row) in features.iter().enumerate() {
            if row.len() != width {
                return Err(Error::parse(k + 1, format!("expected {width} features, found {}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::parse(k + 1, format!("non-finite feature value {v}")));
            }
        }
        if let Some(&l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Label(l as f64));
        }
        let stats = compute_stats(&features);
        Ok(Self {
            feature_names,
            features,
            labels,
            stats,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Checks that the dataset fits the model's input register.
    pub fn check_compatible(&self, spec: &ModelSpec) -> Result<()> {
        if self.n_features() != spec.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "model {} needs {} features, dataset has {}",
                spec.kind,
                spec.n_qubits,
                self.n_features()
            )));
        }
        if spec.kind == ModelKind::Parity4 {
            if let Some((k, _)) = self
                .features
                .iter()
                .enumerate()
                .find(|(_, r)| r.iter().any(|&v| v != 0.0 && v != 1.0))
            {
                return Err(Error::InvalidArgument(format!(
                    "model parity4 needs binary features; row {} is not binary",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    /// Encodes every row with this dataset's own min/max statistics.
    pub fn encode(&self, spec: &ModelSpec) -> Result<Vec<EncodedSample>> {
        self.encode_with(spec, &self.stats)
    }

    pub fn encode_with(&self, spec: &ModelSpec, stats: &[FeatureStats]) -> Result<Vec<EncodedSample>> {
        self.check_compatible(spec)?;
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(row, &y)| ansatz::encode(spec, row, stats, y))
            .collect()
    }

    fn subset(&self, idx: &[usize], provenance: Provenance) -> Result<Dataset> {
        Dataset::new(
            self.feature_names.clone(),
            idx.iter().map(|&i| self.features[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
            provenance,
        )
    }

    /// Seeded shuffle, then the first `1 - test_frac` of rows train and the rest test.
    pub fn shuffle_split(&self, test_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_frac) || test_frac == 0.0 {
            return Err(Error::InvalidArgument(format!("test fraction must be in (0, 1), got {test_frac}")));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..idx.len()).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
        let n_test = ((self.len() as f64) * test_frac).round() as usize;
        let n_train = self.len() - n_test;
        if n_test == 0 || n_train == 0 {
            return Err(Error::InvalidArgument(format!(
                "split of {} rows at {test_frac} leaves an empty part",
                self.len()
            )));
        }
        let part = |name: &str| Provenance::Split {
            seed,
            part: name.to_string(),
        };
        Ok((
            self.subset(&idx[..n_train], part("train"))?,
            self.subset(&idx[n_train..], part("test"))?,
        ))
    }
}

/// All sixteen four-bit strings in lexicographic order with XOR labels.
pub fn gen_parity_dataset() -> Dataset {
    let mut features = Vec::with_capacity(16);
    let mut labels = Vec::with_capacity(16);
    for v in 0u8..16 {
        let bits: Vec<u8> = (0..4).map(|k| (v >> (3 - k)) & 1).collect();
        labels.push(ansatz::parity_label(&bits).expect("four bits"));
        features.push(bits.iter().map(|&b| b as f64).collect());
    }
    Dataset::new(
        (0..4).map(|k| format!("b{k}")).collect(),
        features,
        labels,
        Provenance::GeneratedParity,
    )
    .expect("static dataset")
}

pub const TABULAR_FEATURES: [&str; 8] = [
    "pregnancies",
    "glucose",
    "blood_pressure",
    "skin_thickness",
    "insulin",
    "bmi",
    "pedigree",
    "age",
];

/// Noise-free label of the synthetic tabular generator.
pub fn synthetic_rule(row: &[f64]) -> u8 {
    let score = 0.035 * (row[1] - 121.0)
        + 0.09 * (row[5] - 32.5)
        + 0.04 * (row[7] - 33.0)
        + 0.08 * (row[0] - 3.8)
        + 0.8 * (row[6] - 0.47)
        - 0.6;
    u8::from(score > 0.0)
}

pub const SYNTHETIC_LABEL_NOISE: f64 = 0.1;

/// Eight diabetes-like features with labels from [`synthetic_rule`], each
/// flipped independently with probability 0.1.
pub fn gen_synthetic_tabular(n_samples: usize, seed: u64) -> Result<Dataset> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {n_samples}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = |m: f64, s: f64| Normal::new(m, s).expect("valid normal");
    let pregnancies: Poisson<f64> = Poisson::new(3.8).expect("valid poisson");
    let glucose = normal(121.0, 32.0);
    let pressure = normal(72.0, 12.0);
    let skin = normal(29.0, 10.0);
    let insulin = LogNormal::new(120f64.ln(), 0.6).expect("valid lognormal");
    let bmi = normal(32.5, 7.0);
    let pedigree = LogNormal::new(0.4f64.ln(), 0.6).expect("valid lognormal");
    let age: Exp<f64> = Exp::new(1.0 / 12.0).expect("valid exp");
    let flip = Bernoulli::new(SYNTHETIC_LABEL_NOISE).expect("valid bernoulli");

    let mut features = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let row = vec![
            pregnancies.sample(&mut rng).min(17.0),
            glucose.sample(&mut rng).clamp(40.0, 200.0),
            pressure.sample(&mut rng).clamp(30.0, 122.0),
            skin.sample(&mut rng).clamp(7.0, 99.0),
            insulin.sample(&mut rng).clamp(14.0, 846.0),
            bmi.sample(&mut rng).clamp(18.0, 67.0),
            pedigree.sample(&mut rng).clamp(0.078, 2.42),
            (21.0 + age.sample(&mut rng)).min(81.0).floor(),
        ];
        let clean = synthetic_rule(&row);
        labels.push(if flip.sample(&mut rng) { 1 - clean } else { clean });
        features.push(row);
    }
    Dataset::new(
        TABULAR_FEATURES.iter().map(|s| s.to_string()).collect(),
        features,
        labels,
        Provenance::SyntheticTabular { seed },
    )
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidArgument("empty label column".into()));
        }
        Ok(s.parse::<usize>()
            .map(LabelColumn::Index)
            .unwrap_or_else(|_| LabelColumn::Name(s.to_string())))
    }
}

fn parse_label(field: &str, row: usize) -> Result<u8> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(row, format!("label `{field}` is not numeric")))?;
    if v == 0.0 {
        Ok(0)
    } else if v == 1.0 {
        Ok(1)
    } else {
        Err(Error::parse(row, format!("label {field} is not 0 or 1")))
    }
}

/// Parses a numeric CSV table; the label column is removed and the remaining
/// columns become features in file order. Row numbers in errors are 1-based
/// file lines.
pub fn parse_csv<R: Read>(reader: R, label: &LabelColumn, header: bool, source: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Option<Vec<String>> = if header {
        Some(rdr.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };
    let label_idx = match (label, &names) {
        (LabelColumn::Index(i), _) => *i,
        (LabelColumn::Name(n), Some(h)) => h
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| Error::InvalidArgument(format!("label column `{n}` not found in header")))?,
        (LabelColumn::Name(n), None) => {
            return Err(Error::InvalidArgument(format!(
                "label column `{n}` given by name but the file has no header"
            )))
        }
    };

    let mut width = names.as_ref().map(Vec::len);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1 + usize::from(header);
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::parse(row, format!("expected {w} fields, found {}", rec.len())));
        }
        if label_idx >= w {
            return Err(Error::InvalidArgument(format!(
                "label column {label_idx} out of range for {w} columns"
            )));
        }
        let mut values = Vec::with_capacity(w - 1);
        for (c, field) in rec.iter().enumerate() {
            if c == label_idx {
                labels.push(parse_label(field, row)?);
                continue;
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(row, format!("column {c}: `{field}` is not numeric")))?;
            if !v.is_finite() {
                return Err(Error::parse(row, format!("column {c}: non-finite value")));
            }
            values.push(v);
        }
        features.push(values);
    }
    let w = width.ok_or(Error::EmptyDataset)?;
    if label_idx >= w {
        return Err(Error::InvalidArgument(format!(
            "label column {label_idx} out of range for {w} columns"
        )));
    }
    if w < 2 {
        return Err(Error::InvalidArgument("file has no feature columns besides the label".into()));
    }
    let feature_names = match names {
        Some(h) => h
            .into_iter()
            .enumerate()
            .filter(|(c, _)| *c != label_idx)
            .map(|(_, n)| n)
            .collect(),
        None => (0..w - 1).map(|k| format!("x{k}")).collect(),
    };
    Dataset::new(
        feature_names,
        features,
        labels,
        Provenance::Csv {
            path: source.to_string(),
        },
    )
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, label, header, &path.display().to_string())
}

/// Header row of feature names plus `label`; values in shortest round-trip form.
pub fn dataset_to_csv(ds: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(&ds.feature_names.join(","));
    out.push_str(",label\n");
    for (row, y) in ds.features.iter().zip(&ds.labels) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{y}");
    }
    out
}

/// Writes via a sibling temporary file and a rename.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArtifactFormat {
    Csv,
    Json,
}

impl FromStr for ArtifactFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ArtifactFormat::Csv),
            "json" => Ok(ArtifactFormat::Json),
            other => Err(Error::Format(other.to_string())),
        }
    }
}

impl ArtifactFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        path.extension()
            .and_then(|e| e.to_str())
            .ok_or_else(|| Error::Format(path.display().to_string()))?
            .parse()
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(field: &str, row: usize, what: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(row, format!("{what}: `{field}` is not a number")))
}

fn parse_usize(field: &str, row: usize, what: &str) -> Result<usize> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(row, format!("{what}: `{field}` is not a non-negative integer")))
}

fn params_json(params: &[f64]) -> String {
    let body: Vec<String> = params.iter().map(|&v| fmt_f64(v)).collect();
    format!("[{}]", body.join(","))
}

fn parse_params_json(field: &str, row: usize) -> Result<Vec<f64>> {
    let inner = field
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::parse(row, "params_json must be a JSON array"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|v| parse_f64(v, row, "params_json"))
        .collect()
}

pub const TRACE_HEADER: &str = "iter,cost,lr,restarts,params_json";
pub const SPECTRUM_HEADER: &str = "iter,rank,eigenvalue";

/// Per-iteration columns only; spectra go to `spectrum.csv`.
pub fn trace_to_csv(records: &[IterRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},\"{}\"",
            r.iter,
            fmt_f64(r.cost),
            fmt_f64(r.lr),
            r.restarts,
            params_json(&r.params)
        );
    }
    out
}

fn csv_body(text: &str, header: &str) -> Result<csv::StringRecordsIntoIter<std::io::Cursor<Vec<u8>>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(std::io::Cursor::new(text.as_bytes().to_vec()));
    let got: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if got.join(",") != header {
        return Err(Error::parse(1, format!("expected header `{header}`, found `{}`", got.join(","))));
    }
    Ok(rdr.into_records())
}

pub fn trace_from_csv(text: &str) -> Result<Vec<IterRecord>> {
    let mut out = Vec::new();
    for (k, rec) in csv_body(text, TRACE_HEADER)?.enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        if rec.len() != 5 {
            return Err(Error::parse(row, format!("expected 5 fields, found {}", rec.len())));
        }
        out.push(IterRecord {
            iter: parse_usize(&rec[0], row, "iter")?,
            cost: parse_f64(&rec[1], row, "cost")?,
            lr: parse_f64(&rec[2], row, "lr")?,
            restarts: parse_usize(&rec[3], row, "restarts")?,
            params: parse_params_json(&rec[4], row)?,
            spectrum: None,
        });
    }
    Ok(out)
}

/// One logged eigenvalue list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub iter: usize,
    pub eigenvalues: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpectrumRow {
    iter: usize,
    rank: usize,
    eigenvalue: f64,
}

pub fn spectra_of(trace: &TrainingTrace) -> Vec<SpectrumRecord> {
    trace
        .spectra()
        .into_iter()
        .map(|(iter, eigenvalues)| SpectrumRecord { iter, eigenvalues })
        .collect()
}

pub fn spectrum_to_csv(spectra: &[SpectrumRecord]) -> String {
    let mut out = String::from(SPECTRUM_HEADER);
    out.push('\n');
    for s in spectra {
        for (rank, &v) in s.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", s.iter, rank, fmt_f64(v));
        }
    }
    out
}

fn group_spectrum_rows(rows: Vec<(usize, SpectrumRow)>) -> Result<Vec<SpectrumRecord>> {
    let mut out: Vec<SpectrumRecord> = Vec::new();
    for (line, r) in rows {
        let fresh = match out.last() {
            Some(last) if last.iter == r.iter => false,
            _ => true,
        };
        if fresh {
            if r.rank != 0 {
                return Err(Error::parse(line, format!("spectrum for iteration {} starts at rank {}", r.iter, r.rank)));
            }
            out.push(SpectrumRecord {
                iter: r.iter,
                eigenvalues: Vec::new(),
            });
        }
        let cur = out.last_mut().expect("pushed above");
        if r.rank != cur.eigenvalues.len() {
            return Err(Error::parse(line, format!("rank {} out of sequence", r.rank)));
        }
        cur.eigenvalues.push(r.eigenvalue);
    }
    Ok(out)
}

pub fn spectrum_from_csv(text: &str) -> Result<Vec<SpectrumRecord>> {
    let mut rows = Vec::new();
    for (k, rec) in csv_body(text, SPECTRUM_HEADER)?.enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != 3 {
            return Err(Error::parse(line, format!("expected 3 fields, found {}", rec.len())));
        }
        rows.push((
            line,
            SpectrumRow {
                iter: parse_usize(&rec[0], line, "iter")?,
                rank: parse_usize(&rec[1], line, "rank")?,
                eigenvalue: parse_f64(&rec[2], line, "eigenvalue")?,
            },
        ));
    }
    group_spectrum_rows(rows)
}

pub fn spectrum_to_json(spectra: &[SpectrumRecord]) -> Result<String> {
    let rows: Vec<SpectrumRow> = spectra
        .iter()
        .flat_map(|s| {
            s.eigenvalues.iter().enumerate().map(|(rank, &eigenvalue)| SpectrumRow {
                iter: s.iter,
                rank,
                eigenvalue,
            })
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)?)
}

pub fn spectrum_from_json(text: &str) -> Result<Vec<SpectrumRecord>> {
    let rows: Vec<SpectrumRow> = serde_json::from_str(text)?;
    group_spectrum_rows(rows.into_iter().enumerate().map(|(k, r)| (k + 1, r)).collect())
}

/// The header row, then one row per `axis_i` coordinate.
pub fn slice_to_csv(slice: &LandscapeSlice) -> String {
    let mut out = format!(
        "#axes,{},{},{},{},{}\n",
        slice.axis_i,
        slice.axis_j,
        fmt_f64(slice.range_lo),
        fmt_f64(slice.range_hi),
        slice.resolution
    );
    for row in &slice.grid {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses `slice.csv`. The file does not carry the frozen parameter vector,
/// so `frozen_params` comes back empty.
pub fn slice_from_csv(text: &str) -> Result<LandscapeSlice> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| Error::parse(1, "empty slice file"))?;
    let fields: Vec<&str> = head.split(',').collect();
    if fields.len() != 6 || fields[0] != "#axes" {
        return Err(Error::parse(1, "expected `#axes,i,j,range_lo,range_hi,G`"));
    }
    let axis_i = parse_usize(fields[1], 1, "i")?;
    let axis_j = parse_usize(fields[2], 1, "j")?;
    let range_lo = parse_f64(fields[3], 1, "range_lo")?;
    let range_hi = parse_f64(fields[4], 1, "range_hi")?;
    let resolution = parse_usize(fields[5], 1, "G")?;
    let mut grid = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = k + 2;
        if grid.len() == resolution {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::parse(row, format!("more than {resolution} grid rows")));
        }
        let cells = line
            .split(',')
            .map(|c| parse_f64(c, row, "cell"))
            .collect::<Result<Vec<_>>>()?;
        if cells.len() != resolution {
            return Err(Error::parse(row, format!("expected {resolution} cells, found {}", cells.len())));
        }
        grid.push(cells);
    }
    if grid.len() != resolution {
        return Err(Error::parse(resolution + 1, format!("expected {resolution} grid rows, found {}", grid.len())));
    }
    Ok(LandscapeSlice {
        axis_i,
        axis_j,
        range_lo,
        range_hi,
        resolution,
        grid,
        frozen_params: Vec::new(),
    })
}

#[derive(Serialize, Deserialize)]
struct SliceJson {
    i: usize,
    j: usize,
    range_lo: f64,
    range_hi: f64,
    #[serde(rename = "G")]
    g: usize,
    grid: Vec<Vec<f64>>,
    #[serde(default)]
    frozen_params: Vec<f64>,
}

pub fn slice_to_json(slice: &LandscapeSlice) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SliceJson {
        i: slice.axis_i,
        j: slice.axis_j,
        range_lo: slice.range_lo,
        range_hi: slice.range_hi,
        g: slice.resolution,
        grid: slice.grid.clone(),
        frozen_params: slice.frozen_params.clone(),
    })?)
}

pub fn slice_from_json(text: &str) -> Result<LandscapeSlice> {
    let s: SliceJson = serde_json::from_str(text)?;
    if s.grid.len() != s.g || s.grid.iter().any(|r| r.len() != s.g) {
        return Err(Error::parse(0, format!("grid is not {0}x{0}", s.g)));
    }
    Ok(LandscapeSlice {
        axis_i: s.i,
        axis_j: s.j,
        range_lo: s.range_lo,
        range_hi: s.range_hi,
        resolution: s.g,
        grid: s.grid,
        frozen_params: s.frozen_params,
    })
}

pub fn trace_to_json(trace: &TrainingTrace) -> Result<String> {
    Ok(serde_json::to_string_pretty(trace)?)
}

pub fn trace_from_json(text: &str) -> Result<TrainingTrace> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_trace(trace: &TrainingTrace, path: impl AsRef<Path>, format: ArtifactFormat) -> Result<()> {
    let text = match format {
        ArtifactFormat::Csv => trace_to_csv(&trace.records),
        ArtifactFormat::Json => trace_to_json(trace)?,
    };
    write_atomic(path, text.as_bytes())
}

/// CSV traces come back without spectra, events or outcome (reported as
/// [`Outcome::IterationLimit`]).
pub fn read_trace(path: impl AsRef<Path>, format: ArtifactFormat) -> Result<TrainingTrace> {
    let text = read_to_string(path.as_ref())?;
    match format {
        ArtifactFormat::Csv => Ok(TrainingTrace {
            records: trace_from_csv(&text)?,
            events: Vec::new(),
            outcome: Outcome::IterationLimit,
        }),
        ArtifactFormat::Json => trace_from_json(&text),
    }
}

pub fn write_spectrum(spectra: &[SpectrumRecord], path: impl AsRef<Path>, format: ArtifactFormat) -> Result<()> {
    let text = match format {
        ArtifactFormat::Csv => spectrum_to_csv(spectra),
        ArtifactFormat::Json => spectrum_to_json(spectra)?,
    };
    write_atomic(path, text.as_bytes())
}

pub fn read_spectrum(path: impl AsRef<Path>, format: ArtifactFormat) -> Result<Vec<SpectrumRecord>> {
    let text = read_to_string(path.as_ref())?;
    match format {
        ArtifactFormat::Csv => spectrum_from_csv(&text),
        ArtifactFormat::Json => spectrum_from_json(&text),
    }
}

pub fn write_slice(slice: &LandscapeSlice, path: impl AsRef<Path>, format: ArtifactFormat) -> Result<()> {
    let text = match format {
        ArtifactFormat::Csv => slice_to_csv(slice),
        ArtifactFormat::Json => slice_to_json(slice)?,
    };
    write_atomic(path, text.as_bytes())
}

pub fn read_slice(path: impl AsRef<Path>, format: ArtifactFormat) -> Result<LandscapeSlice> {
    let text = read_to_string(path.as_ref())?;
    match format {
        ArtifactFormat::Csv => slice_from_csv(&text),
        ArtifactFormat::Json => slice_from_json(&text),
    }
}

/// Parameter vector as a JSON array of numbers.
pub fn params_to_json(params: &[f64]) -> Result<String> {
    Ok(serde_json::to_string(params)?)
}

pub fn params_from_json(text: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = serde_json::from_str(text)?;
    Ok(v)
}

pub fn write_params(params: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, params_to_json(params)?.as_bytes())
}

pub fn read_params(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    params_from_json(&read_to_string(path.as_ref())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_dataset_shape() {
        let ds = gen_parity_dataset();
        assert_eq!(ds.len(), 16);
        assert_eq!(ds.labels.iter().filter(|&&l| l == 1).count(), 8);
        assert_eq!(ds.features[0b1011], vec![1.0, 0.0, 1.0, 1.0]);
        assert_eq!(ds.labels[0b1011], 1);
        assert_eq!(ds, gen_parity_dataset());
    }

    #[test]
    fn csv_with_nine_columns() {
        let text = "a,b,c,d,e,f,g,h,label\n1,2,3,4,5,6,7,8,1\n2,3,4,5,6,7,8,9,0\n";
        let ds = parse_csv(text.as_bytes(), &"label".parse().unwrap(), true, "mem").unwrap();
        assert_eq!(ds.n_features(), 8);
        assert_eq!(ds.labels, vec![1, 0]);
        assert_eq!(ds.stats[0], FeatureStats { min: 1.0, max: 2.0 });
    }

    #[test]
    fn csv_single_row_degenerate_stats() {
        let ds = parse_csv("1.5,2.5,1\n".as_bytes(), &LabelColumn::Index(2), false, "mem").unwrap();
        assert_eq!(ds.len(), 1);
        assert!(ds.stats.iter().all(|s| s.min == s.max));
        assert_eq!(ds.feature_names, vec!["x0", "x1"]);
    }

    #[test]
    fn csv_errors_name_the_row() {
        let err = parse_csv("x,y\n1,0\n2,2\n".as_bytes(), &"y".parse().unwrap(), true, "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        let err = parse_csv("x,y\n1,0\nabc,1\n".as_bytes(), &"y".parse().unwrap(), true, "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
        let err = parse_csv("y\n1\n".as_bytes(), &"y".parse().unwrap(), true, "mem").unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)), "{err}");
        assert!(load_csv("/definitely/not/here.csv", &LabelColumn::Index(0), true).is_err());
        let err = parse_csv("x,y\n".as_bytes(), &"y".parse().unwrap(), true, "mem").unwrap_err();
        assert!(matches!(err, Error::EmptyDataset));
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = gen_synthetic_tabular(200, 7).unwrap();
        assert_eq!(a.len(), 200);
        assert_eq!(a.n_features(), 8);
        assert_eq!(a, gen_synthetic_tabular(200, 7).unwrap());
        assert_ne!(a.features, gen_synthetic_tabular(200, 8).unwrap().features);
        assert!(gen_synthetic_tabular(1, 7).is_err());
    }

    #[test]
    fn synthetic_label_noise_rate() {
        let ds = gen_synthetic_tabular(10_000, 3).unwrap();
        let flipped = ds
            .features
            .iter()
            .zip(&ds.labels)
            .filter(|(r, &y)| synthetic_rule(r) != y)
            .count();
        let rate = flipped as f64 / ds.len() as f64;
        assert!((rate - 0.10).abs() <= 0.01, "noise rate {rate}");
    }

    #[test]
    fn stats_recompute_exactly() {
        let ds = gen_synthetic_tabular(50, 1).unwrap();
        assert_eq!(compute_stats(&ds.features), ds.stats);
        let text = dataset_to_csv(&ds);
        let back = parse_csv(text.as_bytes(), &"label".parse().unwrap(), true, "mem").unwrap();
        assert_eq!(back.features, ds.features);
        assert_eq!(back.stats, ds.stats);
    }

    #[test]
    fn split_partitions_rows() {
        let ds = gen_synthetic_tabular(100, 5).unwrap();
        let (tr, te) = ds.shuffle_split(0.2, 9).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 20));
        assert_eq!(ds.shuffle_split(0.2, 9).unwrap().0, tr);
        assert!(ds.shuffle_split(1.5, 9).is_err());
    }

    #[test]
    fn trace_csv_shape() {
        let records: Vec<IterRecord> = (0..3)
            .map(|i| IterRecord {
                iter: i,
                cost: 0.1 * i as f64,
                lr: 0.5,
                restarts: 0,
                params: vec![1.0, -2.5],
                spectrum: None,
            })
            .collect();
        let text = trace_to_csv(&records);
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), TRACE_HEADER);
        assert_eq!(trace_from_csv(&text).unwrap(), records);
    }

    #[test]
    fn slice_cell_format() {
        let slice = LandscapeSlice {
            axis_i: 3,
            axis_j: 7,
            range_lo: -1.0,
            range_hi: 1.0,
            resolution: 2,
            grid: vec![vec![0.1, 0.2], vec![1.0 / 3.0, 0.4]],
            frozen_params: vec![],
        };
        let text = slice_to_csv(&slice);
        let row1: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(row1[0], format!("{:.16e}", 1.0 / 3.0));
        assert!(text.starts_with("#axes,3,7,"));
        assert_eq!(slice_from_csv(&text).unwrap(), slice);
    }

    #[test]
    fn format_from_str() {
        assert_eq!("csv".parse::<ArtifactFormat>().unwrap(), ArtifactFormat::Csv);
        assert!(matches!("xml".parse::<ArtifactFormat>(), Err(Error::Format(_))));
    }
}
