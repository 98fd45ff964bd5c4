//! Variable screening before tree induction.
//!
//! A logistic fit gives each explanatory variable a Wald statistic
//! `(B / SE)^2` and a chi-square(1) p-value; variables whose p-value exceeds
//! `alpha` are dropped. Among the survivors, every pair whose absolute
//! Pearson correlation reaches `r_threshold` loses its later member (in
//! matrix order). Categorical codes enter the correlation as plain numbers.

mod chi2;
mod correlation;
pub mod linalg;
pub mod logistic;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{format_number, Dataset, DatasetError};

pub use chi2::chi_square_sf_1df;
pub use correlation::{pearson, pearson_matrix, CorrelationMatrix};
pub use logistic::{fit_logistic, fit_per_variable, FitWarning, LogisticFit, LogisticOptions, INTERCEPT};

#[derive(Debug, Error)]
pub enum ScreeningError {
    #[error("information matrix is singular{}", variable.as_ref().map(|v| format!(" (check {v})")).unwrap_or_default())]
    Singular { variable: Option<String> },
    #[error("{rows} rows are too few for {terms} coefficients")]
    TooFewRows { rows: usize, terms: usize },
    #[error("variable {0} has zero variance")]
    ZeroVariance(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("malformed screening file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Data(#[from] DatasetError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldRow {
    pub variable: String,
    pub b: f64,
    pub se: f64,
    pub wald: f64,
    pub ddl: u32,
    pub sig: f64,
}

impl WaldRow {
    pub fn new(variable: impl Into<String>, b: f64, se: f64) -> Self {
        let wald = if b == 0.0 { 0.0 } else { (b / se).powi(2) };
        Self::with_wald(variable, b, se, wald)
    }

    /// Row with a given Wald statistic (for published tables whose B and SE
    /// are rounded).
    pub fn with_wald(variable: impl Into<String>, b: f64, se: f64, wald: f64) -> Self {
        let sig = chi_square_sf_1df(wald.max(0.0)).unwrap_or(f64::NAN);
        Self {
            variable: variable.into(),
            b,
            se,
            wald,
            ddl: 1,
            sig,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaldTable {
    pub rows: Vec<WaldRow>,
    pub intercept: WaldRow,
}

impl WaldTable {
    /// `variable,B,SE,wald,ddl,sig`, variables first, intercept last.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ScreeningError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["variable", "B", "SE", "wald", "ddl", "sig"])?;
        for r in self.rows.iter().chain(std::iter::once(&self.intercept)) {
            w.write_record([
                r.variable.clone(),
                format_number(r.b),
                format_number(r.se),
                format_number(r.wald),
                r.ddl.to_string(),
                format_number(r.sig),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn wald_table(fit: &LogisticFit) -> WaldTable {
    let mut rows: Vec<WaldRow> = fit
        .terms()
        .into_iter()
        .map(|(name, b, se)| WaldRow::new(name, b, se))
        .collect();
    let intercept = rows.pop().expect("terms always include the intercept");
    WaldTable { rows, intercept }
}

/// Table from separate single-variable fits: each variable's own row, and
/// the intercept of the first fit (the per-variable intercepts differ).
pub fn wald_table_per_variable(fits: &[LogisticFit]) -> Option<WaldTable> {
    let first = fits.first()?;
    let rows = fits
        .iter()
        .map(|f| WaldRow::new(f.variables[0].clone(), f.coefficients[1], f.std_errors[1]))
        .collect();
    Some(WaldTable {
        rows,
        intercept: WaldRow::new(INTERCEPT, first.coefficients[0], first.std_errors[0]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum DropReason {
    NotSignificant { sig: f64 },
    Correlated { partner: String, r: f64 },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ScreeningOutcome {
    pub kept: Vec<String>,
    pub dropped: Vec<(String, DropReason)>,
}

impl ScreeningOutcome {
    pub fn dropped_names(&self) -> Vec<&str> {
        self.dropped.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// CSV with header `variable,decision,reason,partner,value`; rows follow
    /// the candidate order.
    pub fn write_csv<W: Write>(&self, order: &[String], out: W) -> Result<(), ScreeningError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["variable", "decision", "reason", "partner", "value"])?;
        for name in order {
            if self.kept.contains(name) {
                w.write_record([name.as_str(), "kept", "", "", ""])?;
            } else if let Some((_, reason)) = self.dropped.iter().find(|(n, _)| n == name) {
                match reason {
                    DropReason::NotSignificant { sig } => {
                        w.write_record([name.clone(), "dropped".into(), "not-significant".into(), String::new(), format_number(*sig)])?
                    }
                    DropReason::Correlated { partner, r } => {
                        w.write_record([name.clone(), "dropped".into(), "correlated".into(), partner.clone(), format_number(*r)])?
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads back a file written by [`ScreeningOutcome::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self, ScreeningError> {
        let mut r = csv::Reader::from_reader(input);
        let mut out = ScreeningOutcome::default();
        for rec in r.deserialize() {
            let rec: OutcomeRecord = rec?;
            let value = || {
                rec.value
                    .parse::<f64>()
                    .map_err(|_| ScreeningError::Malformed(format!("bad value {:?} for {}", rec.value, rec.variable)))
            };
            match (rec.decision.as_str(), rec.reason.as_str()) {
                ("kept", _) => out.kept.push(rec.variable.clone()),
                ("dropped", "not-significant") => {
                    let sig = value()?;
                    out.dropped.push((rec.variable.clone(), DropReason::NotSignificant { sig }))
                }
                ("dropped", "correlated") => {
                    let r = value()?;
                    out.dropped.push((
                        rec.variable.clone(),
                        DropReason::Correlated { partner: rec.partner.clone(), r },
                    ))
                }
                (d, r) => return Err(ScreeningError::Malformed(format!("unknown decision {d:?}/{r:?}"))),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Deserialize)]
struct OutcomeRecord {
    variable: String,
    decision: String,
    reason: String,
    partner: String,
    value: String,
}

/// Drops non-significant variables, then one member of each strongly
/// correlated surviving pair.
///
/// Candidates are the variables of `wald`. Pairs are visited in matrix order
/// `(i, j), i < j`; when both are still kept and `|r| >= r_threshold`, the
/// later variable `j` is dropped. Variables missing from `corr` are never
/// dropped for correlation.
pub fn screen(wald: &[WaldRow], corr: &CorrelationMatrix, alpha: f64, r_threshold: f64) -> ScreeningOutcome {
    let mut kept: Vec<String> = Vec::new();
    let mut dropped: Vec<(String, DropReason)> = Vec::new();
    for row in wald {
        if row.sig > alpha {
            dropped.push((row.variable.clone(), DropReason::NotSignificant { sig: row.sig }));
        } else {
            kept.push(row.variable.clone());
        }
    }

    let names = corr.names();
    let in_play: Vec<usize> = (0..names.len()).filter(|&i| kept.contains(&names[i])).collect();
    let mut removed = vec![false; names.len()];
    for (a, &i) in in_play.iter().enumerate() {
        if removed[i] {
            continue;
        }
        for &j in &in_play[a + 1..] {
            if removed[j] {
                continue;
            }
            let r = corr.values()[i][j];
            if r.abs() >= r_threshold {
                removed[j] = true;
                dropped.push((
                    names[j].clone(),
                    DropReason::Correlated {
                        partner: names[i].clone(),
                        r,
                    },
                ));
            }
        }
    }
    kept.retain(|v| !corr.index_of(v).is_some_and(|i| removed[i]));

    // report drops in candidate order
    let order: Vec<&String> = wald.iter().map(|w| &w.variable).collect();
    dropped.sort_by_key(|(n, _)| order.iter().position(|o| *o == n));
    ScreeningOutcome { kept, dropped }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub alpha: f64,
    pub r_threshold: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub separation_bound: f64,
    /// Separate one-variable fits instead of one joint fit.
    pub per_variable: bool,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        let l = LogisticOptions::default();
        Self {
            alpha: 0.05,
            r_threshold: 0.8,
            max_iter: l.max_iter,
            tol: l.tol,
            separation_bound: l.separation_bound,
            per_variable: false,
        }
    }
}

impl ScreeningConfig {
    pub fn logistic_options(&self) -> LogisticOptions {
        LogisticOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            separation_bound: self.separation_bound,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScreeningReport {
    pub fits: Vec<LogisticFit>,
    pub wald: WaldTable,
    /// Correlations among the variables that passed the significance test.
    pub correlation: CorrelationMatrix,
    pub outcome: ScreeningOutcome,
}

/// Full screening run over `variables` of a cleaned, encoded dataset.
pub fn run_screening(data: &Dataset, variables: &[String], config: &ScreeningConfig) -> Result<ScreeningReport, ScreeningError> {
    let opts = config.logistic_options();
    let (fits, wald) = if config.per_variable {
        let fits = fit_per_variable(data, variables, &opts)?;
        let table = match wald_table_per_variable(&fits) {
            Some(t) => t,
            None => wald_table(&fit_logistic(data, &[], &opts)?),
        };
        (fits, table)
    } else {
        let fit = fit_logistic(data, variables, &opts)?;
        let table = wald_table(&fit);
        (vec![fit], table)
    };
    let significant: Vec<String> = wald
        .rows
        .iter()
        .filter(|r| r.sig <= config.alpha)
        .map(|r| r.variable.clone())
        .collect();
    let correlation = pearson_matrix(data, &significant)?;
    let outcome = screen(&wald.rows, &correlation, config.alpha, config.r_threshold);
    Ok(ScreeningReport {
        fits,
        wald,
        correlation,
        outcome,
    })
}
