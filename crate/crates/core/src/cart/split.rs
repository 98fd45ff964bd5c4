//! Impurity measures and the exhaustive best-split search.

use serde::Serialize;

use super::{CartConfig, CartError, Samples, Target};
use crate::dataset::{ClassDistribution, FeatureKind};

/// Gini index `1 - sum(p_i^2)` of a class distribution.
pub fn gini(dist: &ClassDistribution) -> Result<f64, CartError> {
    if dist.total() == 0 {
        return Err(CartError::EmptyDistribution);
    }
    Ok(gini_counts(dist.counts()))
}

/// Gini index of raw class counts; 0 for an empty node.
pub fn gini_counts(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Size-weighted Gini of a two-way partition.
pub fn split_gini(left: &ClassDistribution, right: &ClassDistribution) -> Result<f64, CartError> {
    if left.total() == 0 || right.total() == 0 {
        return Err(CartError::EmptyDistribution);
    }
    Ok(split_gini_counts(left.counts(), right.counts()))
}

pub fn split_gini_counts(left: &[usize], right: &[usize]) -> f64 {
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    (nl as f64 * gini_counts(left) + nr as f64 * gini_counts(right)) / (nl + nr) as f64
}

/// Population variance from running sums, clamped at zero.
fn variance(n: usize, sum: f64, sum_sq: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let mean = sum / n;
    (sum_sq / n - mean * mean).max(0.0)
}

fn split_variance(l: (usize, f64, f64), r: (usize, f64, f64)) -> f64 {
    let n = (l.0 + r.0) as f64;
    (l.0 as f64 * variance(l.0, l.1, l.2) + r.0 as f64 * variance(r.0, r.1, r.2)) / n
}

/// Threshold placed between two consecutive distinct values `a < b`.
///
/// The midpoint is used unless rounding pushes it onto `b`, in which case
/// `a` itself separates the two values under the `value <= t` test.
pub fn numeric_threshold(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t >= a && t < b {
        t
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SplitTest {
    /// Left iff `value <= threshold`.
    Threshold(f64),
    /// Left iff the code is in `codes`. `present` lists every code seen at
    /// the node during training; `codes` is a proper non-empty subset of it
    /// and always holds the smallest present code.
    Subset { codes: Vec<i64>, present: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitRule {
    pub feature: String,
    pub test: SplitTest,
}

impl SplitRule {
    /// `true` routes left. Codes never seen at the node go right.
    pub fn goes_left(&self, value: f64) -> bool {
        match &self.test {
            SplitTest::Threshold(t) => value <= *t,
            SplitTest::Subset { codes, .. } => codes.iter().any(|&c| c as f64 == value),
        }
    }

    pub fn is_unseen(&self, value: f64) -> bool {
        match &self.test {
            SplitTest::Threshold(_) => false,
            SplitTest::Subset { present, .. } => !present.iter().any(|&c| c as f64 == value),
        }
    }

    pub fn describe(&self) -> String {
        match &self.test {
            SplitTest::Threshold(t) => format!("{} <= {}", self.feature, t),
            SplitTest::Subset { codes, .. } => {
                let list: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
                format!("{} in {{{}}}", self.feature, list.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    /// Position of the feature in [`Samples::features`].
    pub feature: usize,
    pub rule: SplitRule,
    /// Impurity of the node minus the weighted impurity of the children.
    pub decrease: f64,
}

/// Node impurity: Gini for classification, variance for regression.
pub fn node_impurity(samples: &Samples, rows: &[usize]) -> f64 {
    match &samples.target {
        Target::Classes(y) => gini_counts(&class_counts(y, rows)),
        Target::Values(y) => {
            let (s, ss) = rows.iter().fold((0.0, 0.0), |(s, ss), &r| (s + y[r], ss + y[r] * y[r]));
            variance(rows.len(), s, ss)
        }
    }
}

pub fn class_counts(y: &[u8], rows: &[usize]) -> [usize; 2] {
    let mut c = [0usize; 2];
    for &r in rows {
        c[y[r] as usize] += 1;
    }
    c
}

/// All `2^(m-1) - 1` two-way partitions of the distinct `codes` (sorted,
/// `m >= 2`), each given by the side holding the smallest code, in
/// lexicographic order of the sorted code lists.
pub fn subset_candidates(codes: &[i64]) -> Vec<Vec<i64>> {
    let m = codes.len();
    if m < 2 {
        return Vec::new();
    }
    let rest = m - 1;
    let mut out: Vec<Vec<i64>> = (0u64..(1u64 << rest) - 1)
        .map(|mask| {
            let mut s = vec![codes[0]];
            s.extend((0..rest).filter(|b| mask >> b & 1 == 1).map(|b| codes[b + 1]));
            s
        })
        .collect();
    out.sort();
    out
}

/// Best admissible split of the node holding `rows`.
///
/// Every midpoint between consecutive distinct values of a numeric feature
/// and every two-way partition of the codes present for a categorical
/// feature is scored. Ties keep the first candidate met in the order:
/// feature position, then ascending threshold, then lexicographic subset.
/// Returns `None` for nodes with fewer than two rows or zero impurity, when
/// no candidate leaves both children non-empty, or when the best decrease is
/// below `config.min_gini_decrease`.
pub fn best_split(samples: &Samples, rows: &[usize], config: &CartConfig) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let parent = node_impurity(samples, rows);
    if parent == 0.0 {
        return None;
    }
    let mut best: Option<Split> = None;
    let mut consider = |feature: usize, test: SplitTest, weighted: f64| {
        let decrease = parent - weighted;
        if best.as_ref().is_none_or(|b| decrease > b.decrease) {
            best = Some(Split {
                feature,
                rule: SplitRule {
                    feature: samples.features[feature].name.clone(),
                    test,
                },
                decrease,
            });
        }
    };

    for (f, spec) in samples.features.iter().enumerate() {
        let col = &samples.columns[f];
        match spec.kind {
            FeatureKind::Numeric => {
                let mut order: Vec<usize> = rows.to_vec();
                order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
                match &samples.target {
                    Target::Classes(y) => {
                        let total = class_counts(y, rows);
                        let mut left = [0usize; 2];
                        for k in 0..order.len() - 1 {
                            left[y[order[k]] as usize] += 1;
                            let (a, b) = (col[order[k]], col[order[k + 1]]);
                            if a < b {
                                let right = [total[0] - left[0], total[1] - left[1]];
                                consider(f, SplitTest::Threshold(numeric_threshold(a, b)), split_gini_counts(&left, &right));
                            }
                        }
                    }
                    Target::Values(y) => {
                        let (ts, tss) = rows.iter().fold((0.0, 0.0), |(s, ss), &r| (s + y[r], ss + y[r] * y[r]));
                        let (mut ls, mut lss) = (0.0, 0.0);
                        for k in 0..order.len() - 1 {
                            let v = y[order[k]];
                            ls += v;
                            lss += v * v;
                            let (a, b) = (col[order[k]], col[order[k + 1]]);
                            if a < b {
                                let nl = k + 1;
                                let w = split_variance((nl, ls, lss), (order.len() - nl, ts - ls, tss - lss));
                                consider(f, SplitTest::Threshold(numeric_threshold(a, b)), w);
                            }
                        }
                    }
                }
            }
            FeatureKind::Categorical { .. } => {
                let mut present: Vec<i64> = rows.iter().map(|&r| col[r] as i64).collect();
                present.sort_unstable();
                present.dedup();
                if present.len() < 2 {
                    continue;
                }
                let position = |v: f64| present.binary_search(&(v as i64)).expect("code present");
                match &samples.target {
                    Target::Classes(y) => {
                        let mut per_code = vec![[0usize; 2]; present.len()];
                        for &r in rows {
                            per_code[position(col[r])][y[r] as usize] += 1;
                        }
                        let total = class_counts(y, rows);
                        for codes in subset_candidates(&present) {
                            let mut left = [0usize; 2];
                            for c in &codes {
                                let pc = per_code[present.binary_search(c).unwrap()];
                                left[0] += pc[0];
                                left[1] += pc[1];
                            }
                            let right = [total[0] - left[0], total[1] - left[1]];
                            let w = split_gini_counts(&left, &right);
                            consider(f, SplitTest::Subset { codes, present: present.clone() }, w);
                        }
                    }
                    Target::Values(y) => {
                        let mut per_code = vec![(0usize, 0.0, 0.0); present.len()];
                        for &r in rows {
                            let e = &mut per_code[position(col[r])];
                            e.0 += 1;
                            e.1 += y[r];
                            e.2 += y[r] * y[r];
                        }
                        let total = per_code.iter().fold((0, 0.0, 0.0), |a, e| (a.0 + e.0, a.1 + e.1, a.2 + e.2));
                        for codes in subset_candidates(&present) {
                            let mut left = (0usize, 0.0, 0.0);
                            for c in &codes {
                                let e = per_code[present.binary_search(c).unwrap()];
                                left = (left.0 + e.0, left.1 + e.1, left.2 + e.2);
                            }
                            let right = (total.0 - left.0, total.1 - left.1, total.2 - left.2);
                            consider(f, SplitTest::Subset { codes, present: present.clone() }, split_variance(left, right));
                        }
                    }
                }
            }
        }
    }

    best.filter(|b| b.decrease >= config.min_gini_decrease)
}
