//! Classifier assessment: confusion matrix, error ratios, rates and ROC.
//!
//! Class 1 is the positive (solvent) class. Cells follow the usual
//! convention: `fn_` counts actual-1 rows predicted 0 and `fp` counts
//! actual-0 rows predicted 1, so `e1 = fn/N1`, `e2 = fp/N0` and
//! `e3 = (fn + fp)/N`. Some published write-ups of the reference matrix
//! swap the FN/FP names in prose while their arithmetic uses this
//! orientation; only the orientation here is supported.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no rows to evaluate")]
    EmptyInput,
    #[error("class {0} is absent from the actual labels")]
    DegenerateClass(u8),
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub vp: u64,
    pub vn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(vp: u64, vn: u64, fp: u64, fn_: u64) -> Self {
        Self { vp, vn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.vp + self.vn + self.fp + self.fn_
    }

    /// Actual-1 rows.
    pub fn n1(&self) -> u64 {
        self.vp + self.fn_
    }

    /// Actual-0 rows.
    pub fn n0(&self) -> u64 {
        self.vn + self.fp
    }

    /// `(actual, predicted)` pairs realizing this matrix, actual-0 rows first.
    pub fn to_pairs(&self) -> Vec<(u8, u8)> {
        let mut out = Vec::with_capacity(self.total() as usize);
        out.extend(std::iter::repeat_n((0, 0), self.vn as usize));
        out.extend(std::iter::repeat_n((0, 1), self.fp as usize));
        out.extend(std::iter::repeat_n((1, 0), self.fn_ as usize));
        out.extend(std::iter::repeat_n((1, 1), self.vp as usize));
        out
    }
}

pub fn confusion(pairs: &[(u8, u8)]) -> Result<ConfusionMatrix, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for &(actual, predicted) in pairs {
        match (actual, predicted) {
            (1, 1) => cm.vp += 1,
            (0, 0) => cm.vn += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            (a, p) => return Err(EvalError::InvalidLabel(if a > 1 { a } else { p })),
        }
    }
    Ok(cm)
}

fn check_classes(cm: &ConfusionMatrix) -> Result<(), EvalError> {
    if cm.n0() == 0 {
        return Err(EvalError::DegenerateClass(0));
    }
    if cm.n1() == 0 {
        return Err(EvalError::DegenerateClass(1));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRates {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

pub fn error_rates(cm: &ConfusionMatrix) -> Result<ErrorRates, EvalError> {
    check_classes(cm)?;
    Ok(ErrorRates {
        e1: cm.fn_ as f64 / cm.n1() as f64,
        e2: cm.fp as f64 / cm.n0() as f64,
        e3: (cm.fn_ + cm.fp) as f64 / cm.total() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics, EvalError> {
    check_classes(cm)?;
    Ok(Metrics {
        accuracy: (cm.vp + cm.vn) as f64 / cm.total() as f64,
        sensitivity: cm.vp as f64 / cm.n1() as f64,
        specificity: cm.vn as f64 / cm.n0() as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(fpr, tpr)` from the highest threshold down.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    pub se: f64,
    pub ci95: (f64, f64),
}

impl RocCurve {
    /// `fpr<TAB>tpr` header followed by one point per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("fpr\ttpr\n");
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x}\t{y}");
        }
        out
    }
}

/// Trapezoidal area under a polyline.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

/// Threshold sweep over the distinct scores, highest first; a row counts as
/// positive at threshold `t` when its score is at least `t`.
pub fn roc(pairs: &[(u8, f64)]) -> Result<RocCurve, EvalError> {
    let mut n1 = 0u64;
    let mut n0 = 0u64;
    for &(actual, score) in pairs {
        match actual {
            0 => n0 += 1,
            1 => n1 += 1,
            other => return Err(EvalError::InvalidLabel(other)),
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(EvalError::ScoreOutOfRange(score));
        }
    }
    if n0 == 0 {
        return Err(EvalError::DegenerateClass(0));
    }
    if n1 == 0 {
        return Err(EvalError::DegenerateClass(1));
    }
    let mut sorted: Vec<(u8, f64)> = pairs.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].1;
        while i < sorted.len() && sorted[i].1 == t {
            if sorted[i].0 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n0 as f64, tp as f64 / n1 as f64));
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
    }
    let auc = trapezoid(&points);
    let (se, ci95) = auc_se_ci(auc, n1, n0)?;
    Ok(RocCurve { points, auc, se, ci95 })
}

/// Hanley–McNeil standard error of an AUC and the normal 95% interval
/// `auc ± 1.96 se`, clamped to [0, 1].
///
/// The endpoints 0 and 1 are accepted (the error is 0 there).
pub fn auc_se_ci(auc: f64, n1: u64, n0: u64) -> Result<(f64, (f64, f64)), EvalError> {
    if !(0.0..=1.0).contains(&auc) {
        return Err(EvalError::Domain(format!("auc {auc} is outside [0, 1]")));
    }
    if n1 == 0 || n0 == 0 {
        return Err(EvalError::Domain("both classes need at least one row".into()));
    }
    let a = auc;
    let q1 = a / (2.0 - a);
    let q2 = 2.0 * a * a / (1.0 + a);
    let (n1, n0) = (n1 as f64, n0 as f64);
    let var = (a * (1.0 - a) + (n1 - 1.0) * (q1 - a * a) + (n0 - 1.0) * (q2 - a * a)) / (n1 * n0);
    let se = var.max(0.0).sqrt();
    let lo = (a - 1.96 * se).max(0.0);
    let hi = (a + 1.96 * se).min(1.0);
    Ok((se, (lo, hi)))
}

/// Machine-readable evaluation record. Ratios are `null` when a class is
/// absent; the AUC fields are `null` when no ROC curve could be built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationDocument {
    pub vp: u64,
    pub vn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub e3: Option<f64>,
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub auc: Option<f64>,
    pub auc_se: Option<f64>,
    pub auc_ci_low: Option<f64>,
    pub auc_ci_high: Option<f64>,
    pub roc_available: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub rates: Option<ErrorRates>,
    pub metrics: Option<Metrics>,
    pub roc: Option<RocCurve>,
}

impl EvaluationReport {
    pub fn document(&self) -> EvaluationDocument {
        let cm = self.confusion;
        EvaluationDocument {
            vp: cm.vp,
            vn: cm.vn,
            fp: cm.fp,
            fn_: cm.fn_,
            e1: self.rates.map(|r| r.e1),
            e2: self.rates.map(|r| r.e2),
            e3: self.rates.map(|r| r.e3),
            accuracy: self.metrics.map(|m| m.accuracy),
            sensitivity: self.metrics.map(|m| m.sensitivity),
            specificity: self.metrics.map(|m| m.specificity),
            auc: self.roc.as_ref().map(|r| r.auc),
            auc_se: self.roc.as_ref().map(|r| r.se),
            auc_ci_low: self.roc.as_ref().map(|r| r.ci95.0),
            auc_ci_high: self.roc.as_ref().map(|r| r.ci95.1),
            roc_available: self.roc.is_some(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.document()).expect("plain struct serializes");
        s.push('\n');
        s
    }

    /// Plain-text tables: confusion matrix, error ratios, rates, ROC summary.
    pub fn to_table(&self) -> String {
        let cm = self.confusion;
        let mut out = String::new();
        let _ = writeln!(out, "Confusion matrix (rows: actual, columns: predicted)");
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10}", "", "0", "1", "total");
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10}", "0", cm.vn, cm.fp, cm.n0());
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10}", "1", cm.fn_, cm.vp, cm.n1());
        let _ = writeln!(out, "{:>10} {:>10} {:>10} {:>10}", "total", cm.vn + cm.fn_, cm.fp + cm.vp, cm.total());
        let _ = writeln!(out, "VP = {}  VN = {}  FP = {}  FN = {}", cm.vp, cm.vn, cm.fp, cm.fn_);
        out.push('\n');
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.8}"));
        let _ = writeln!(out, "Error ratios");
        let _ = writeln!(out, "  e1 = {}", fmt(self.rates.map(|r| r.e1)));
        let _ = writeln!(out, "  e2 = {}", fmt(self.rates.map(|r| r.e2)));
        let _ = writeln!(out, "  e3 = {}", fmt(self.rates.map(|r| r.e3)));
        out.push('\n');
        let _ = writeln!(out, "Rates");
        let _ = writeln!(out, "  accuracy    = {}", fmt(self.metrics.map(|m| m.accuracy)));
        let _ = writeln!(out, "  sensitivity = {}", fmt(self.metrics.map(|m| m.sensitivity)));
        let _ = writeln!(out, "  specificity = {}", fmt(self.metrics.map(|m| m.specificity)));
        out.push('\n');
        match &self.roc {
            Some(r) => {
                let _ = writeln!(out, "ROC");
                let _ = writeln!(out, "  AUC        = {:.6}", r.auc);
                let _ = writeln!(out, "  std. error = {:.6} (Hanley-McNeil)", r.se);
                let _ = writeln!(out, "  95% CI     = [{:.6}, {:.6}]", r.ci95.0, r.ci95.1);
                let _ = writeln!(out, "  points     = {}", r.points.len());
            }
            None => {
                let _ = writeln!(out, "ROC: unavailable (both classes are needed)");
            }
        }
        out
    }
}

/// Evaluates `(actual, predicted, score)` triples.
pub fn evaluate(rows: &[(u8, u8, f64)]) -> Result<EvaluationReport, EvalError> {
    let pairs: Vec<(u8, u8)> = rows.iter().map(|&(a, p, _)| (a, p)).collect();
    let cm = confusion(&pairs)?;
    let scored: Vec<(u8, f64)> = rows.iter().map(|&(a, _, s)| (a, s)).collect();
    let roc = match roc(&scored) {
        Ok(r) => Some(r),
        Err(EvalError::DegenerateClass(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(report(cm, error_rates(&cm).ok(), metrics(&cm).ok(), roc))
}

pub fn report(
    cm: ConfusionMatrix,
    rates: Option<ErrorRates>,
    metrics: Option<Metrics>,
    roc: Option<RocCurve>,
) -> EvaluationReport {
    EvaluationReport {
        confusion: cm,
        rates,
        metrics,
        roc,
    }
}
