//! Label-to-code mapping for nominal variables.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Cell, Dataset, DatasetError, FeatureKind, Result};

/// Per-feature ordered mapping from source label to integer code.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CodeBook {
    entries: BTreeMap<String, Vec<(String, i64)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CodeRecord {
    feature: String,
    label: String,
    code: i64,
}

impl CodeBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one `(feature, label, code)` triple. Labels and codes must be
    /// distinct within a feature.
    pub fn insert(&mut self, feature: &str, label: &str, code: i64) -> Result<()> {
        let list = self.entries.entry(feature.to_string()).or_default();
        if list.iter().any(|(l, _)| l == label) {
            return Err(DatasetError::InvalidCodeBook(format!("{feature}: duplicate label {label:?}")));
        }
        if list.iter().any(|(_, c)| *c == code) {
            return Err(DatasetError::InvalidCodeBook(format!("{feature}: duplicate code {code}")));
        }
        list.push((label.to_string(), code));
        Ok(())
    }

    pub fn encode(&self, feature: &str, label: &str) -> Option<i64> {
        self.entries
            .get(feature)?
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| *c)
    }

    pub fn decode(&self, feature: &str, code: i64) -> Option<&str> {
        self.entries
            .get(feature)?
            .iter()
            .find(|(_, c)| *c == code)
            .map(|(l, _)| l.as_str())
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.entries.contains_key(feature)
    }

    /// Entries of one feature in insertion order.
    pub fn labels(&self, feature: &str) -> &[(String, i64)] {
        self.entries.get(feature).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn modalities(&self, feature: &str) -> usize {
        self.labels(feature).len()
    }

    /// Kind implied for a column: categorical when the book knows it.
    pub fn kind_of(&self, feature: &str) -> FeatureKind {
        match self.modalities(feature) {
            0 => FeatureKind::Numeric,
            m => FeatureKind::Categorical { modalities: m.max(2) },
        }
    }

    /// Coding of the seven nominal credit variables.
    pub fn credit() -> Self {
        let table: &[(&str, &[(&str, i64)])] = &[
            ("NAME_CONTRACT_TYPE", &[("Cash loans", 1), ("Revolving loans", 0)]),
            ("CODE_GENDER", &[("F", 1), ("M", 0)]),
            ("FLAG_OWN_CAR", &[("Y", 1), ("N", 0)]),
            (
                "NAME_INCOME_TYPE",
                &[("State servant", 1), ("Working", 2), ("Commercial associate", 3), ("Pensioner", 4)],
            ),
            (
                "NAME_FAMILY_STATUS",
                &[
                    ("Married", 1),
                    ("Single / not married", 2),
                    ("Civil marriage", 3),
                    ("Separated", 4),
                    ("Widow", 5),
                ],
            ),
            (
                "NAME_HOUSING_TYPE",
                &[
                    ("House / apartment", 1),
                    ("With parents", 2),
                    ("Municipal apartment", 3),
                    ("Office apartment", 4),
                    ("Co-op apartment", 5),
                    ("Rented apartment", 6),
                ],
            ),
            (
                "NAME_EDUCATION_TYPE",
                &[
                    ("Higher education", 1),
                    ("Incomplete higher", 2),
                    ("Secondary / secondary special", 3),
                    ("Lower secondary", 4),
                ],
            ),
        ];
        let mut book = CodeBook::new();
        for (feature, labels) in table {
            for (label, code) in labels.iter() {
                book.insert(feature, label, *code).expect("static table is consistent");
            }
        }
        book
    }

    /// Assigns codes to the labels of `features` by first appearance in
    /// `raw`. Two-label features are coded 0, 1; others 1, 2, ...
    pub fn infer(raw: &Dataset, features: &[&str]) -> Result<Self> {
        let mut book = CodeBook::new();
        for &name in features {
            let col = raw
                .schema()
                .position(name)
                .ok_or_else(|| DatasetError::UnknownColumn(name.to_string()))?;
            let mut labels: Vec<&str> = Vec::new();
            for row in raw.rows() {
                if let Cell::Label(l) = &row[col] {
                    if !labels.contains(&l.as_str()) {
                        labels.push(l);
                    }
                }
            }
            let start = if labels.len() == 2 { 0 } else { 1 };
            for (i, label) in labels.iter().enumerate() {
                book.insert(name, label, start + i as i64)?;
            }
        }
        Ok(book)
    }

    /// Reads a CSV codebook with header `feature,label,code`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => DatasetError::MissingFile(path.to_path_buf()),
            _ => DatasetError::Io(e),
        })?;
        let mut reader = csv::Reader::from_reader(file);
        let mut book = CodeBook::new();
        for rec in reader.deserialize() {
            let rec: CodeRecord = rec?;
            book.insert(&rec.feature, &rec.label, rec.code)?;
        }
        Ok(book)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for (feature, labels) in &self.entries {
            for (label, code) in labels {
                writer.serialize(CodeRecord {
                    feature: feature.clone(),
                    label: label.clone(),
                    code: *code,
                })?;
            }
        }
        writer.flush()?;
        Ok(())
    }
}
