//! Binary CART trees grown with the Gini index.
//!
//! A tree is stored as a preorder arena of [`Node`]s: the root is node 0 and
//! every split node names its left (`True`) and right (`False`) children by
//! index. Growth stops at a node when it is pure, when it holds fewer than
//! `min_node_size` rows, when it sits at `max_depth`, or when no admissible
//! split reaches `min_gini_decrease`. Leaves predict the majority class
//! (ties go to class 0) and carry the proportion of class 1 as a score.

mod export;
mod model_io;
mod split;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ClassDistribution, Dataset, DatasetError, FeatureKind, FeatureSpec};

pub use export::{export_dot, export_text};
pub use model_io::{deserialize, serialize, FORMAT_VERSION};
pub use split::{
    best_split, class_counts, gini, gini_counts, node_impurity, numeric_threshold, split_gini, split_gini_counts,
    subset_candidates, Split, SplitRule, SplitTest,
};

#[derive(Debug, Error)]
pub enum CartError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("class distribution is empty")]
    EmptyDistribution,
    #[error("no features to split on")]
    NoFeatures,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed model document at line {line}: {message}")]
    MalformedDocument { line: usize, message: String },
    #[error("unsupported model format {found:?}, expected {expected:?}")]
    VersionMismatch { found: String, expected: String },
    #[error(transparent)]
    Data(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Classification,
    /// Variance impurity and mean-valued leaves.
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CartConfig {
    /// Nodes with fewer rows become leaves. Limited to 1..=5 unless
    /// `allow_large_min_node_size` is set.
    pub min_node_size: usize,
    pub max_depth: usize,
    /// Smallest impurity decrease a split must reach (variance decrease in
    /// regression mode).
    pub min_gini_decrease: f64,
    pub mode: Mode,
    pub allow_large_min_node_size: bool,
}

impl Default for CartConfig {
    fn default() -> Self {
        Self {
            min_node_size: 5,
            max_depth: 10,
            min_gini_decrease: 0.0,
            mode: Mode::Classification,
            allow_large_min_node_size: false,
        }
    }
}

impl CartConfig {
    pub fn validate(&self) -> Result<(), CartError> {
        if self.min_node_size < 1 {
            return Err(CartError::InvalidConfig("min-node-size must be at least 1".into()));
        }
        if self.min_node_size > 5 && !self.allow_large_min_node_size {
            return Err(CartError::InvalidConfig(format!(
                "min-node-size {} is outside 1..=5 (set the override to allow it)",
                self.min_node_size
            )));
        }
        if !(self.min_gini_decrease >= 0.0) || !self.min_gini_decrease.is_finite() {
            return Err(CartError::InvalidConfig(format!(
                "min-gini-decrease {} must be a nonnegative number",
                self.min_gini_decrease
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Target {
    Classes(Vec<u8>),
    Values(Vec<f64>),
}

/// Column-major training matrix over the features a tree may split on.
#[derive(Debug, Clone)]
pub struct Samples {
    /// `index` is the position within this list.
    pub features: Vec<FeatureSpec>,
    pub columns: Vec<Vec<f64>>,
    pub target: Target,
}

impl Samples {
    pub fn from_dataset(data: &Dataset, features: &[String], mode: Mode) -> Result<Self, CartError> {
        let mut specs = Vec::with_capacity(features.len());
        let mut columns = Vec::with_capacity(features.len());
        for (index, name) in features.iter().enumerate() {
            let spec = data
                .schema()
                .feature(name)
                .ok_or_else(|| CartError::SchemaMismatch(format!("dataset has no feature {name}")))?;
            specs.push(FeatureSpec {
                name: spec.name.clone(),
                kind: spec.kind,
                index,
            });
            columns.push(data.column(name)?);
        }
        let target = match mode {
            Mode::Classification => Target::Classes(data.binary_targets()?),
            Mode::Regression => Target::Values(data.target_values()?),
        };
        Ok(Self {
            features: specs,
            columns,
            target,
        })
    }

    pub fn len(&self) -> usize {
        match &self.target {
            Target::Classes(y) => y.len(),
            Target::Values(y) => y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NodeStats {
    Classes { counts: [usize; 2] },
    Values { mean: f64, variance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum LeafValue {
    Class { class: u8, positive_proportion: f64 },
    Mean(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NodeKind {
    Leaf(LeafValue),
    Split { rule: SplitRule, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub n: usize,
    pub depth: usize,
    pub stats: NodeStats,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn distribution(&self) -> Option<ClassDistribution> {
        match self.stats {
            NodeStats::Classes { counts } => Some(ClassDistribution::binary(counts[0], counts[1])),
            NodeStats::Values { .. } => None,
        }
    }
}

/// Majority class (ties to class 0) and class-1 proportion of a node.
pub fn assign_leaf(dist: &ClassDistribution) -> Result<LeafValue, CartError> {
    let n = dist.total();
    if n == 0 {
        return Err(CartError::EmptyDistribution);
    }
    let (c0, c1) = (dist.count(0), dist.count(1));
    Ok(LeafValue::Class {
        class: u8::from(c1 > c0),
        positive_proportion: c1 as f64 / n as f64,
    })
}

/// Mean-valued leaf for regression mode.
pub fn assign_leaf_mean(values: &[f64]) -> Result<LeafValue, CartError> {
    if values.is_empty() {
        return Err(CartError::EmptyDistribution);
    }
    Ok(LeafValue::Mean(values.iter().sum::<f64>() / values.len() as f64))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartTree {
    /// Preorder; node 0 is the root.
    pub nodes: Vec<Node>,
    /// Features the tree was grown on, with their kinds.
    pub features: Vec<FeatureSpec>,
    pub target: String,
    pub config: CartConfig,
    pub training_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnseenCode {
    pub node: usize,
    pub feature: String,
    pub code: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Index of the leaf reached.
    pub leaf: usize,
    pub value: LeafValue,
    /// Categorical codes that were never seen at a split node in training;
    /// such rows are sent right.
    pub unseen: Vec<UnseenCode>,
}

impl Prediction {
    pub fn class(&self) -> Option<u8> {
        match self.value {
            LeafValue::Class { class, .. } => Some(class),
            LeafValue::Mean(_) => None,
        }
    }

    /// Class-1 proportion of the leaf, or its mean in regression mode.
    pub fn score(&self) -> f64 {
        match self.value {
            LeafValue::Class { positive_proportion, .. } => positive_proportion,
            LeafValue::Mean(m) => m,
        }
    }
}

struct Grower<'a> {
    samples: &'a Samples,
    config: &'a CartConfig,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn stats(&self, rows: &[usize]) -> NodeStats {
        match &self.samples.target {
            Target::Classes(y) => NodeStats::Classes {
                counts: class_counts(y, rows),
            },
            Target::Values(y) => {
                let n = rows.len() as f64;
                let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n;
                let variance = rows.iter().map(|&r| (y[r] - mean).powi(2)).sum::<f64>() / n;
                NodeStats::Values { mean, variance }
            }
        }
    }

    fn leaf_value(&self, stats: &NodeStats) -> LeafValue {
        match *stats {
            NodeStats::Classes { counts } => {
                assign_leaf(&ClassDistribution::binary(counts[0], counts[1])).expect("nodes are never empty")
            }
            NodeStats::Values { mean, .. } => LeafValue::Mean(mean),
        }
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let stats = self.stats(&rows);
        let id = self.nodes.len();
        let leaf = self.leaf_value(&stats);
        self.nodes.push(Node {
            n: rows.len(),
            depth,
            stats,
            kind: NodeKind::Leaf(leaf),
        });
        if rows.len() < self.config.min_node_size || depth >= self.config.max_depth {
            return id;
        }
        let Some(split) = best_split(self.samples, &rows, self.config) else {
            return id;
        };
        let col = &self.samples.columns[split.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| split.rule.goes_left(col[r]));
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id].kind = NodeKind::Split {
            rule: split.rule,
            left,
            right,
        };
        id
    }
}

/// Grows a tree on `features` of a cleaned dataset.
pub fn grow(data: &Dataset, features: &[String], config: &CartConfig) -> Result<CartTree, CartError> {
    config.validate()?;
    if data.is_empty() {
        return Err(CartError::EmptyDataset);
    }
    if features.is_empty() {
        return Err(CartError::NoFeatures);
    }
    let samples = Samples::from_dataset(data, features, config.mode)?;
    Ok(grow_samples(&samples, data.target_name(), config))
}

pub fn grow_samples(samples: &Samples, target: &str, config: &CartConfig) -> CartTree {
    let mut grower = Grower {
        samples,
        config,
        nodes: Vec::new(),
    };
    grower.build((0..samples.len()).collect(), 0);
    CartTree {
        nodes: grower.nodes,
        features: samples.features.clone(),
        target: target.to_string(),
        config: *config,
        training_n: samples.len(),
    }
}

impl CartTree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    /// Routes one row given in the tree's feature order.
    pub fn predict_values(&self, values: &[f64]) -> Result<Prediction, CartError> {
        if values.len() != self.features.len() {
            return Err(CartError::SchemaMismatch(format!(
                "row has {} values, tree uses {} features",
                values.len(),
                self.features.len()
            )));
        }
        let mut unseen = Vec::new();
        let mut id = 0;
        loop {
            match &self.nodes[id].kind {
                NodeKind::Leaf(value) => {
                    return Ok(Prediction {
                        leaf: id,
                        value: value.clone(),
                        unseen,
                    })
                }
                NodeKind::Split { rule, left, right } => {
                    let f = self
                        .features
                        .iter()
                        .position(|f| f.name == rule.feature)
                        .expect("validated tree names its own features");
                    let v = values[f];
                    if rule.is_unseen(v) {
                        unseen.push(UnseenCode {
                            node: id,
                            feature: rule.feature.clone(),
                            code: v,
                        });
                    }
                    id = if rule.goes_left(v) { *left } else { *right };
                }
            }
        }
    }

    /// Feature columns of `data` in tree order, after checking that every
    /// tree feature exists there with the same kind.
    pub fn columns_for(&self, data: &Dataset) -> Result<Vec<Vec<f64>>, CartError> {
        self.features
            .iter()
            .map(|f| {
                let spec = data
                    .schema()
                    .feature(&f.name)
                    .ok_or_else(|| CartError::SchemaMismatch(format!("dataset lacks feature {}", f.name)))?;
                if spec.kind != f.kind {
                    return Err(CartError::SchemaMismatch(format!(
                        "feature {} is {} in the model but {} in the data",
                        f.name, f.kind, spec.kind
                    )));
                }
                Ok(data.column(&f.name)?)
            })
            .collect()
    }

    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<Prediction>, CartError> {
        let columns = self.columns_for(data)?;
        let mut row = vec![0.0; columns.len()];
        (0..data.n())
            .map(|i| {
                for (slot, col) in row.iter_mut().zip(&columns) {
                    *slot = col[i];
                }
                self.predict_values(&row)
            })
            .collect()
    }

    /// Structural checks shared by deserialization and tests.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("tree has no nodes".into());
        }
        let mut reached = vec![false; self.nodes.len()];
        reached[0] = true;
        for (i, node) in self.nodes.iter().enumerate() {
            if node.depth > self.config.max_depth {
                return Err(format!("node {i} deeper than max-depth"));
            }
            if let NodeKind::Split { rule, left, right } = &node.kind {
                let (l, r) = (*left, *right);
                if l <= i || r <= i || l >= self.nodes.len() || r >= self.nodes.len() || l == r {
                    return Err(format!("node {i} has invalid children {l}, {r}"));
                }
                if reached[l] || reached[r] {
                    return Err(format!("node {i} shares a child"));
                }
                reached[l] = true;
                reached[r] = true;
                let (ln, rn) = (&self.nodes[l], &self.nodes[r]);
                if ln.n + rn.n != node.n || ln.n == 0 || rn.n == 0 {
                    return Err(format!("node {i}: n = {} but children hold {} + {}", node.n, ln.n, rn.n));
                }
                if ln.depth != node.depth + 1 || rn.depth != node.depth + 1 {
                    return Err(format!("node {i}: child depth mismatch"));
                }
                let Some(spec) = self.features.iter().find(|f| f.name == rule.feature) else {
                    return Err(format!("node {i} splits on unknown feature {}", rule.feature));
                };
                match (&rule.test, spec.kind) {
                    (SplitTest::Threshold(_), FeatureKind::Numeric) => {}
                    (SplitTest::Subset { codes, present }, FeatureKind::Categorical { .. }) => {
                        if codes.is_empty() || codes.len() >= present.len() || !codes.iter().all(|c| present.contains(c)) {
                            return Err(format!("node {i} has an improper subset"));
                        }
                    }
                    _ => return Err(format!("node {i} rule does not fit the kind of {}", rule.feature)),
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return Err("unreachable nodes".into());
        }
        if self.nodes[0].n != self.training_n {
            return Err("root size differs from training size".into());
        }
        Ok(())
    }
}
