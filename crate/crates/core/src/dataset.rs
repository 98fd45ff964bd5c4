//! Typed tabular credit data.
//!
//! A [`Dataset`] is a list of rows over a fixed [`Schema`] plus one target
//! column (always stored last in each row). Raw loads keep categorical cells
//! as text labels and mark empty or unparseable cells as [`Cell::Missing`];
//! [`apply_codebook`] turns labels into integer codes and [`clean`] removes
//! incomplete rows and numeric outliers.
//!
//! Row indices reported in errors and cleaning logs are zero-based and count
//! data rows only (the header is not a row).

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::CodeBook;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("header mismatch: expected columns {expected:?}, found {found:?}")]
    HeaderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown label {label:?} for feature {feature} at row {row}")]
    UnknownLabel {
        feature: String,
        label: String,
        row: usize,
    },
    #[error("feature {feature} at row {row} still holds a text label; encode it first")]
    NotEncoded { feature: String, row: usize },
    #[error("missing value in column {column} at row {row}")]
    MissingValue { column: String, row: usize },
    #[error("target value {value} at row {row} is not 0 or 1")]
    NonBinaryTarget { row: usize, value: f64 },
    #[error("cleaning dropped every row")]
    EmptyResult,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid codebook: {0}")]
    InvalidCodeBook(String),
    #[error("invalid holdout split: {0}")]
    InvalidSplit(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    /// Nominal variable stored as integer codes.
    Categorical { modalities: usize },
}

impl FeatureKind {
    pub fn is_categorical(&self) -> bool {
        matches!(self, FeatureKind::Categorical { .. })
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureKind::Numeric => write!(f, "numeric"),
            FeatureKind::Categorical { modalities } => write!(f, "categorical({modalities})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub index: usize,
}

/// Ordered explanatory variables. Names are unique and indices run 0..len.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    features: Vec<FeatureSpec>,
}

impl Schema {
    pub fn new<S: Into<String>>(features: impl IntoIterator<Item = (S, FeatureKind)>) -> Result<Self> {
        let mut specs = Vec::new();
        let mut seen = HashSet::new();
        for (index, (name, kind)) in features.into_iter().enumerate() {
            let name = name.into();
            if name.is_empty() {
                return Err(DatasetError::InvalidSchema(format!("feature {index} has an empty name")));
            }
            if !seen.insert(name.clone()) {
                return Err(DatasetError::InvalidSchema(format!("duplicate feature name {name}")));
            }
            if let FeatureKind::Categorical { modalities } = kind {
                if modalities < 2 {
                    return Err(DatasetError::InvalidSchema(format!(
                        "categorical feature {name} needs at least 2 modalities, got {modalities}"
                    )));
                }
            }
            specs.push(FeatureSpec { name, kind, index });
        }
        Ok(Self { features: specs })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureSpec> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Reads a schema file with header `name,kind,modalities`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(open(path)?);
        let mut features = Vec::new();
        for record in reader.deserialize() {
            let rec: SchemaRecord = record?;
            let kind = match rec.kind.as_str() {
                "numeric" => FeatureKind::Numeric,
                "categorical" => FeatureKind::Categorical {
                    modalities: rec.modalities.ok_or_else(|| {
                        DatasetError::InvalidSchema(format!("{} lacks a modality count", rec.name))
                    })?,
                },
                other => {
                    return Err(DatasetError::InvalidSchema(format!(
                        "unknown kind {other:?} for {}",
                        rec.name
                    )))
                }
            };
            features.push((rec.name, kind));
        }
        Schema::new(features)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for f in &self.features {
            let (kind, modalities) = match f.kind {
                FeatureKind::Numeric => ("numeric".to_string(), None),
                FeatureKind::Categorical { modalities } => ("categorical".to_string(), Some(modalities)),
            };
            writer.serialize(SchemaRecord {
                name: f.name.clone(),
                kind,
                modalities,
            })?;
        }
        writer.flush()?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SchemaRecord {
    name: String,
    kind: String,
    modalities: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Value(f64),
    /// Categorical text not yet encoded.
    Label(String),
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            _ => None,
        }
    }
}

/// Tokens treated as missing in addition to the empty string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingTokens(pub Vec<String>);

impl Default for MissingTokens {
    fn default() -> Self {
        Self(vec!["NA".to_string(), "N/A".to_string()])
    }
}

impl MissingTokens {
    fn is_missing(&self, text: &str) -> bool {
        text.is_empty() || self.0.iter().any(|t| t == text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    target: String,
    rows: Vec<Vec<Cell>>,
}

impl Dataset {
    /// Builds a dataset from rows of cells, each holding the features in
    /// schema order followed by the target.
    pub fn new(schema: Schema, target: impl Into<String>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        let target = target.into();
        if schema.position(&target).is_some() {
            return Err(DatasetError::InvalidSchema(format!(
                "target {target} is also listed as a feature"
            )));
        }
        let width = schema.len() + 1;
        for (row, cells) in rows.iter().enumerate() {
            if cells.len() != width {
                return Err(DatasetError::RaggedRow {
                    row,
                    expected: width,
                    found: cells.len(),
                });
            }
        }
        Ok(Self { schema, target, rows })
    }

    /// Convenience constructor for fully numeric (already encoded) rows.
    pub fn from_values(schema: Schema, target: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(Cell::Value).collect())
            .collect();
        Dataset::new(schema, target, rows)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn target_name(&self) -> &str {
        &self.target
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn target_index(&self) -> usize {
        self.schema.len()
    }

    /// Positions `(row, column)` of every missing marker.
    pub fn missing_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if matches!(cell, Cell::Missing) {
                    out.push((r, c));
                }
            }
        }
        out
    }

    fn column_name(&self, col: usize) -> &str {
        if col == self.schema.len() {
            &self.target
        } else {
            &self.schema.features()[col].name
        }
    }

    fn numeric_column(&self, col: usize) -> Result<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(row, cells)| match &cells[col] {
                Cell::Value(v) => Ok(*v),
                Cell::Missing => Err(DatasetError::MissingValue {
                    column: self.column_name(col).to_string(),
                    row,
                }),
                Cell::Label(_) => Err(DatasetError::NotEncoded {
                    feature: self.column_name(col).to_string(),
                    row,
                }),
            })
            .collect()
    }

    /// Values of one feature column; fails on missing or unencoded cells.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let col = self
            .schema
            .position(name)
            .ok_or_else(|| DatasetError::UnknownColumn(name.to_string()))?;
        self.numeric_column(col)
    }

    pub fn target_values(&self) -> Result<Vec<f64>> {
        self.numeric_column(self.schema.len())
    }

    /// Target as class labels; every value must be exactly 0 or 1.
    pub fn binary_targets(&self) -> Result<Vec<u8>> {
        self.target_values()?
            .into_iter()
            .enumerate()
            .map(|(row, v)| {
                if v == 0.0 {
                    Ok(0)
                } else if v == 1.0 {
                    Ok(1)
                } else {
                    Err(DatasetError::NonBinaryTarget { row, value: v })
                }
            })
            .collect()
    }

    /// Rows at `indices`, in the order given.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            target: self.target.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Writes the dataset as CSV. Missing cells are written empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let mut header = self.schema.names();
        header.push(self.target.clone());
        writer.write_record(&header)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|c| match c {
                Cell::Missing => String::new(),
                Cell::Value(v) => format_number(*v),
                Cell::Label(s) => s.clone(),
            }))?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_number(v: f64) -> String {
    format!("{v}")
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DatasetError::MissingFile(path.to_path_buf()),
        _ => DatasetError::Io(e),
    })
}

/// Loads a raw CSV file. Columns are matched to the schema by header name,
/// so their order in the file is free, but the header must contain exactly
/// the schema names plus the target.
pub fn load_csv(path: &Path, schema: &Schema, target: &str, missing: &MissingTokens) -> Result<Dataset> {
    read_csv(open(path)?, schema, target, missing)
}

pub fn read_csv<R: Read>(input: R, schema: &Schema, target: &str, missing: &MissingTokens) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut expected = schema.names();
    expected.push(target.to_string());
    let mismatch = || DatasetError::HeaderMismatch {
        expected: expected.clone(),
        found: header.clone(),
    };
    if header.len() != expected.len() {
        return Err(mismatch());
    }
    // positions[c] = file column holding dataset column c
    let mut positions = Vec::with_capacity(expected.len());
    for name in &expected {
        match header.iter().position(|h| h == name) {
            Some(p) => positions.push(p),
            None => return Err(mismatch()),
        }
    }
    let unique: HashSet<&String> = header.iter().collect();
    if unique.len() != header.len() {
        return Err(mismatch());
    }

    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(DatasetError::RaggedRow {
                row,
                expected: header.len(),
                found: record.len(),
            });
        }
        let mut cells = Vec::with_capacity(expected.len());
        for (c, &p) in positions.iter().enumerate() {
            let text = record[p].trim();
            let categorical = c < schema.len() && schema.features()[c].kind.is_categorical();
            let cell = if missing.is_missing(text) {
                Cell::Missing
            } else if categorical {
                Cell::Label(text.to_string())
            } else {
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => Cell::Value(v),
                    _ => Cell::Missing,
                }
            };
            cells.push(cell);
        }
        rows.push(cells);
    }
    Dataset::new(schema.clone(), target, rows)
}

/// Replaces categorical labels with their codes from `book`.
pub fn apply_codebook(raw: &Dataset, book: &CodeBook) -> Result<Dataset> {
    let mut rows = raw.rows.clone();
    for feature in raw.schema.features().iter().filter(|f| f.kind.is_categorical()) {
        for (row, cells) in rows.iter_mut().enumerate() {
            if let Cell::Label(label) = &cells[feature.index] {
                let code = book.encode(&feature.name, label).ok_or_else(|| DatasetError::UnknownLabel {
                    feature: feature.name.clone(),
                    label: label.clone(),
                    row,
                })?;
                cells[feature.index] = Cell::Value(code as f64);
            }
        }
    }
    Dataset::new(raw.schema.clone(), raw.target.clone(), rows)
}

/// Treats categorical labels as already-encoded integers.
pub fn parse_codes(raw: &Dataset) -> Result<Dataset> {
    let mut rows = raw.rows.clone();
    for feature in raw.schema.features().iter().filter(|f| f.kind.is_categorical()) {
        for (row, cells) in rows.iter_mut().enumerate() {
            if let Cell::Label(label) = &cells[feature.index] {
                let code: i64 = label.parse().map_err(|_| DatasetError::UnknownLabel {
                    feature: feature.name.clone(),
                    label: label.clone(),
                    row,
                })?;
                cells[feature.index] = Cell::Value(code as f64);
            }
        }
    }
    Dataset::new(raw.schema.clone(), raw.target.clone(), rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum OutlierRule {
    Off,
    /// Tukey fences `[Q1 - m*IQR, Q3 + m*IQR]`.
    Iqr { multiplier: f64 },
    /// `|x - mean| / sd > threshold`, population standard deviation.
    ZScore { threshold: f64 },
}

impl Default for OutlierRule {
    fn default() -> Self {
        OutlierRule::Iqr { multiplier: 1.5 }
    }
}

impl OutlierRule {
    /// Closed interval of accepted values for a column, or `None` when the
    /// rule accepts everything.
    pub fn fences(&self, values: &[f64]) -> Option<(f64, f64)> {
        if values.is_empty() {
            return None;
        }
        match *self {
            OutlierRule::Off => None,
            OutlierRule::Iqr { multiplier } => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                let q1 = quantile_sorted(&sorted, 0.25);
                let q3 = quantile_sorted(&sorted, 0.75);
                let iqr = q3 - q1;
                Some((q1 - multiplier * iqr, q3 + multiplier * iqr))
            }
            OutlierRule::ZScore { threshold } => {
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd == 0.0 {
                    return None;
                }
                Some((mean - threshold * sd, mean + threshold * sd))
            }
        }
    }
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (`h = (n - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CleaningLog {
    /// `(row index in the input dataset, reason)`, sorted by row index.
    pub entries: Vec<(usize, String)>,
}

impl CleaningLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One `<row-index>\t<reason>` line per dropped row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (row, reason) in &self.entries {
            out.push_str(&format!("{row}\t{reason}\n"));
        }
        out
    }
}

/// Drops rows with missing cells, then drops numeric outliers under `rule`.
///
/// Fences are recomputed on the surviving rows until no further row falls
/// outside them, so the result contains no outliers by its own statistics
/// and cleaning a cleaned dataset changes nothing. Only numeric features are
/// inspected for outliers; the target never is. Surviving rows keep their
/// relative order.
pub fn clean(raw: &Dataset, rule: &OutlierRule) -> Result<(Dataset, CleaningLog)> {
    let mut log = CleaningLog::default();
    let mut alive: Vec<usize> = Vec::with_capacity(raw.n());

    for (row, cells) in raw.rows.iter().enumerate() {
        if let Some(col) = cells.iter().position(|c| matches!(c, Cell::Missing)) {
            log.entries
                .push((row, format!("missing value in {}", raw.column_name(col))));
            continue;
        }
        if let Some(col) = cells.iter().position(|c| matches!(c, Cell::Label(_))) {
            return Err(DatasetError::NotEncoded {
                feature: raw.column_name(col).to_string(),
                row,
            });
        }
        alive.push(row);
    }

    let numeric: Vec<&FeatureSpec> = raw
        .schema
        .features()
        .iter()
        .filter(|f| f.kind == FeatureKind::Numeric)
        .collect();
    loop {
        let fences: Vec<Option<(f64, f64)>> = numeric
            .iter()
            .map(|f| {
                let values: Vec<f64> = alive
                    .iter()
                    .filter_map(|&r| raw.rows[r][f.index].value())
                    .collect();
                rule.fences(&values)
            })
            .collect();
        let before = alive.len();
        alive.retain(|&r| {
            for (f, fence) in numeric.iter().zip(&fences) {
                if let (Some((lo, hi)), Some(v)) = (fence, raw.rows[r][f.index].value()) {
                    if v < *lo || v > *hi {
                        log.entries.push((
                            r,
                            format!("outlier in {}: {} outside [{}, {}]", f.name, v, lo, hi),
                        ));
                        return false;
                    }
                }
            }
            true
        });
        if alive.len() == before {
            break;
        }
    }

    if alive.is_empty() {
        return Err(DatasetError::EmptyResult);
    }
    log.entries.sort_by_key(|(row, _)| *row);
    Ok((raw.subset(&alive), log))
}

/// Counts per target class; class `i` has code `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassDistribution {
    counts: Vec<usize>,
}

impl ClassDistribution {
    pub fn from_counts(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    /// Two-class distribution: `n0` non-solvent, `n1` solvent.
    pub fn binary(n0: usize, n1: usize) -> Self {
        Self { counts: vec![n0, n1] }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn count(&self, class: usize) -> usize {
        self.counts.get(class).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// `count_i / total`; all zeros for an empty distribution.
    pub fn proportions(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }
}

pub fn class_distribution(data: &Dataset) -> Result<ClassDistribution> {
    if data.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    let mut counts = vec![0usize; 2];
    for y in data.binary_targets()? {
        counts[y as usize] += 1;
    }
    Ok(ClassDistribution::from_counts(counts))
}

/// Seeded train/holdout partition of `0..n`. Both index lists are returned
/// in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoldoutSplit {
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
}

/// Shuffles `0..n` with ChaCha8 seeded from `seed` and reserves the first
/// `round(n * fraction)` indices for the holdout part.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<HoldoutSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DatasetError::InvalidSplit(format!("fraction {fraction} is not in (0, 1)")));
    }
    let k = (n as f64 * fraction).round() as usize;
    if k == 0 || k == n {
        return Err(DatasetError::InvalidSplit(format!(
            "fraction {fraction} of {n} rows leaves one side empty"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut holdout = idx[..k].to_vec();
    let mut train = idx[k..].to_vec();
    holdout.sort_unstable();
    train.sort_unstable();
    Ok(HoldoutSplit { train, holdout })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema2() -> Schema {
        Schema::new([
            ("AMT", FeatureKind::Numeric),
            ("CODE_GENDER", FeatureKind::Categorical { modalities: 2 }),
        ])
        .unwrap()
    }

    #[test]
    fn loads_matching_header() {
        let csv = "AMT,CODE_GENDER,TARGET\n1.5,F,1\n2,M,0\n3,F,1\n";
        let d = read_csv(csv.as_bytes(), &schema2(), "TARGET", &MissingTokens::default()).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.rows()[1][1], Cell::Label("M".into()));
        assert_eq!(d.rows()[0][0], Cell::Value(1.5));
    }

    #[test]
    fn header_order_is_free() {
        let csv = "TARGET,CODE_GENDER,AMT\n1,F,7\n";
        let d = read_csv(csv.as_bytes(), &schema2(), "TARGET", &MissingTokens::default()).unwrap();
        assert_eq!(d.rows()[0], vec![Cell::Value(7.0), Cell::Label("F".into()), Cell::Value(1.0)]);
    }

    #[test]
    fn missing_target_column_is_header_mismatch() {
        let csv = "AMT,CODE_GENDER\n1,F\n";
        let err = read_csv(csv.as_bytes(), &schema2(), "TARGET", &MissingTokens::default()).unwrap_err();
        match err {
            DatasetError::HeaderMismatch { expected, found } => {
                assert_eq!(expected, vec!["AMT", "CODE_GENDER", "TARGET"]);
                assert_eq!(found, vec!["AMT", "CODE_GENDER"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_row_reports_index() {
        let csv = "AMT,CODE_GENDER,TARGET\n1,F,1\n2,M\n";
        let err = read_csv(csv.as_bytes(), &schema2(), "TARGET", &MissingTokens::default()).unwrap_err();
        assert!(matches!(err, DatasetError::RaggedRow { row: 1, expected: 3, found: 2 }));
    }

    #[test]
    fn blank_and_sentinel_cells_are_missing() {
        let csv = "AMT,CODE_GENDER,TARGET\n1,F,1\n,M,0\n3,F,1\n";
        let d = read_csv(csv.as_bytes(), &schema2(), "TARGET", &MissingTokens::default()).unwrap();
        assert_eq!(d.missing_cells(), vec![(1, 0)]);

        let csv = "AMT,CODE_GENDER,TARGET\nNA,F,1\nabc,N/A,0\n";
        let d = read_csv(csv.as_bytes(), &schema2(), "TARGET", &MissingTokens::default()).unwrap();
        assert_eq!(d.missing_cells(), vec![(0, 0), (1, 0), (1, 1)]);
    }

    #[test]
    fn missing_file() {
        let err = load_csv(Path::new("/nonexistent/x.csv"), &schema2(), "T", &MissingTokens::default()).unwrap_err();
        assert!(matches!(err, DatasetError::MissingFile(_)));
    }

    #[test]
    fn codebook_encodes_credit_labels() {
        let csv = "AMT,CODE_GENDER,TARGET\n1,F,1\n2,M,0\n";
        let raw = read_csv(csv.as_bytes(), &schema2(), "TARGET", &MissingTokens::default()).unwrap();
        let enc = apply_codebook(&raw, &CodeBook::credit()).unwrap();
        assert_eq!(enc.column("CODE_GENDER").unwrap(), vec![1.0, 0.0]);
        assert_eq!(enc.column("AMT").unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn unknown_label_is_reported() {
        let csv = "AMT,CODE_GENDER,TARGET\n1,F,1\n2,X,0\n";
        let raw = read_csv(csv.as_bytes(), &schema2(), "TARGET", &MissingTokens::default()).unwrap();
        let err = apply_codebook(&raw, &CodeBook::credit()).unwrap_err();
        match err {
            DatasetError::UnknownLabel { feature, label, row } => {
                assert_eq!((feature.as_str(), label.as_str(), row), ("CODE_GENDER", "X", 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    fn numeric_schema() -> Schema {
        Schema::new([("x", FeatureKind::Numeric)]).unwrap()
    }

    #[test]
    fn clean_drops_rows_with_missing_cells() {
        let mut rows = Vec::new();
        for i in 0..10 {
            let x = if i == 3 || i == 7 { Cell::Missing } else { Cell::Value(i as f64) };
            rows.push(vec![x, Cell::Value((i % 2) as f64)]);
        }
        let d = Dataset::new(numeric_schema(), "y", rows).unwrap();
        let (c, log) = clean(&d, &OutlierRule::Off).unwrap();
        assert_eq!(c.n(), 8);
        assert_eq!(log.entries.iter().map(|e| e.0).collect::<Vec<_>>(), vec![3, 7]);
        assert_eq!(log.to_text().lines().next().unwrap(), "3\tmissing value in x");
    }

    #[test]
    fn clean_all_missing_is_empty_result() {
        let rows = (0..4).map(|_| vec![Cell::Missing, Cell::Value(1.0)]).collect();
        let d = Dataset::new(numeric_schema(), "y", rows).unwrap();
        assert!(matches!(clean(&d, &OutlierRule::default()), Err(DatasetError::EmptyResult)));
    }

    #[test]
    fn clean_rejects_unencoded_labels() {
        let d = Dataset::new(schema2(), "y", vec![vec![Cell::Value(1.0), Cell::Label("F".into()), Cell::Value(0.0)]])
            .unwrap();
        assert!(matches!(clean(&d, &OutlierRule::Off), Err(DatasetError::NotEncoded { .. })));
    }

    #[test]
    fn planted_outlier_is_the_only_row_dropped() {
        // 100 values 50..=149 with one replaced by 100x the median.
        let mut values: Vec<f64> = (50..150).map(|v| v as f64).collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let median = quantile_sorted(&sorted, 0.5);
        assert_eq!(median, 99.5);
        values[42] = 100.0 * median;
        // Hand fences on the dirty column: Q1 at h = 24.75, Q3 at h = 74.25.
        // Sorted dirty data is 50..=149 without 92, then 9950.
        let mut dirty = values.clone();
        dirty.sort_by(f64::total_cmp);
        let q1 = 74.0 + 0.75 * (75.0 - 74.0);
        let q3 = 125.0 + 0.25 * (126.0 - 125.0);
        assert_eq!(quantile_sorted(&dirty, 0.25), q1);
        assert_eq!(quantile_sorted(&dirty, 0.75), q3);
        let hi = q3 + 1.5 * (q3 - q1);
        assert!(dirty[98] < hi && 9950.0 > hi);

        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &v)| vec![v, (i % 2) as f64])
            .collect();
        let d = Dataset::from_values(numeric_schema(), "y", rows).unwrap();
        let (c, log) = clean(&d, &OutlierRule::default()).unwrap();
        assert_eq!(c.n(), 99);
        assert_eq!(log.entries.len(), 1);
        assert_eq!(log.entries[0].0, 42);
        assert!(log.entries[0].1.starts_with("outlier in x"));
    }

    #[test]
    fn zscore_rule_and_off() {
        let mut v: Vec<f64> = (0..50).map(|i| (i % 5) as f64).collect();
        v.push(1000.0);
        let (lo, hi) = OutlierRule::ZScore { threshold: 3.0 }.fences(&v).unwrap();
        assert!(lo < 0.0 && hi < 1000.0);
        assert!(OutlierRule::Off.fences(&v).is_none());
        assert!(OutlierRule::ZScore { threshold: 3.0 }.fences(&[2.0, 2.0]).is_none());
    }

    #[test]
    fn class_distribution_examples() {
        let mut rows = vec![vec![0.0, 1.0]; 1996];
        rows.extend(vec![vec![0.0, 0.0]; 1992]);
        let d = Dataset::from_values(numeric_schema(), "y", rows).unwrap();
        let dist = class_distribution(&d).unwrap();
        assert_eq!(dist.counts(), &[1992, 1996]);
        let p = dist.proportions();
        assert!((p[1] - 0.500_501_504_513_540_6).abs() < 1e-15);
        assert!((p[0] - 0.499_498_495_486_459_4).abs() < 1e-15);

        let d = Dataset::from_values(numeric_schema(), "y", vec![vec![1.0, 1.0]; 3]).unwrap();
        assert_eq!(class_distribution(&d).unwrap().proportions(), vec![0.0, 1.0]);

        let d = Dataset::from_values(numeric_schema(), "y", vec![]).unwrap();
        assert!(matches!(class_distribution(&d), Err(DatasetError::EmptyDataset)));
    }

    #[test]
    fn non_binary_target_rejected() {
        let d = Dataset::from_values(numeric_schema(), "y", vec![vec![0.0, 2.0]]).unwrap();
        assert!(matches!(class_distribution(&d), Err(DatasetError::NonBinaryTarget { row: 0, .. })));
    }

    #[test]
    fn schema_invariants() {
        assert!(Schema::new([("a", FeatureKind::Numeric), ("a", FeatureKind::Numeric)]).is_err());
        assert!(Schema::new([("a", FeatureKind::Categorical { modalities: 1 })]).is_err());
        let s = Schema::new([("a", FeatureKind::Numeric), ("b", FeatureKind::Numeric)]).unwrap();
        assert_eq!(s.features().iter().map(|f| f.index).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn schema_file_round_trip() {
        let s = schema2();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "name,kind,modalities\nAMT,numeric,\nCODE_GENDER,categorical,2\n"
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("schema.csv");
        std::fs::write(&path, buf).unwrap();
        assert_eq!(Schema::read_csv(&path).unwrap(), s);
    }

    #[test]
    fn holdout_is_seeded_and_disjoint() {
        let a = holdout_split(100, 0.3, 7).unwrap();
        let b = holdout_split(100, 0.3, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.holdout.len(), 30);
        assert_eq!(a.train.len(), 70);
        let mut all: Vec<usize> = a.train.iter().chain(&a.holdout).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_ne!(holdout_split(100, 0.3, 8).unwrap(), a);
        assert!(holdout_split(10, 1.0, 1).is_err());
        assert!(holdout_split(2, 0.1, 1).is_err());
    }
}
