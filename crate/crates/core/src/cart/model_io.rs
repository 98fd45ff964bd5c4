//! Line-oriented model document.
//!
//! ```text
//! format-version  cart-model/1
//! target          TARGET
//! training-n      4
//! config          min-node-size=1 max-depth=10 min-gini-decrease=... mode=classification allow-large-min-node-size=false
//! features        1
//! feature         0 x numeric
//! nodes           3
//! node            0 split n=4 depth=0 counts=2,2 feature=x threshold=2.5000000000000000e0 left=1 right=2
//! node            1 leaf n=2 depth=1 counts=2,0 class=0 proportion=0.0000000000000000e0
//! ...
//! end
//! ```
//!
//! Fields are separated by a single tab (the spacing above is for reading
//! only). Reals are written with 17 significant digits so every `f64`
//! survives the round trip.

use std::collections::HashMap;

use super::{CartConfig, CartError, CartTree, LeafValue, Mode, Node, NodeKind, NodeStats, SplitRule, SplitTest};
use crate::dataset::{FeatureKind, FeatureSpec};

pub const FORMAT_VERSION: &str = "cart-model/1";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn codes(list: &[i64]) -> String {
    list.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Classification => "classification",
        Mode::Regression => "regression",
    }
}

pub fn serialize(tree: &CartTree) -> String {
    let mut out = String::new();
    let mut line = |fields: &[String]| {
        out.push_str(&fields.join("\t"));
        out.push('\n');
    };
    let c = &tree.config;
    line(&["format-version".into(), FORMAT_VERSION.into()]);
    line(&["target".into(), tree.target.clone()]);
    line(&["training-n".into(), tree.training_n.to_string()]);
    line(&[
        "config".into(),
        format!("min-node-size={}", c.min_node_size),
        format!("max-depth={}", c.max_depth),
        format!("min-gini-decrease={}", real(c.min_gini_decrease)),
        format!("mode={}", mode_name(c.mode)),
        format!("allow-large-min-node-size={}", c.allow_large_min_node_size),
    ]);
    line(&["features".into(), tree.features.len().to_string()]);
    for f in &tree.features {
        let mut fields = vec!["feature".to_string(), f.index.to_string(), f.name.clone()];
        match f.kind {
            FeatureKind::Numeric => fields.push("numeric".into()),
            FeatureKind::Categorical { modalities } => {
                fields.push("categorical".into());
                fields.push(modalities.to_string());
            }
        }
        line(&fields);
    }
    line(&["nodes".into(), tree.nodes.len().to_string()]);
    for (i, node) in tree.nodes.iter().enumerate() {
        let mut fields = vec!["node".to_string(), i.to_string()];
        fields.push(if node.is_leaf() { "leaf" } else { "split" }.into());
        fields.push(format!("n={}", node.n));
        fields.push(format!("depth={}", node.depth));
        match &node.stats {
            NodeStats::Classes { counts } => fields.push(format!("counts={},{}", counts[0], counts[1])),
            NodeStats::Values { mean, variance } => {
                fields.push(format!("mean={}", real(*mean)));
                fields.push(format!("variance={}", real(*variance)));
            }
        }
        match &node.kind {
            NodeKind::Leaf(LeafValue::Class { class, positive_proportion }) => {
                fields.push(format!("class={class}"));
                fields.push(format!("proportion={}", real(*positive_proportion)));
            }
            NodeKind::Leaf(LeafValue::Mean(m)) => fields.push(format!("value={}", real(*m))),
            NodeKind::Split { rule, left, right } => {
                fields.push(format!("feature={}", rule.feature));
                match &rule.test {
                    SplitTest::Threshold(t) => fields.push(format!("threshold={}", real(*t))),
                    SplitTest::Subset { codes: s, present } => {
                        fields.push(format!("subset={}", codes(s)));
                        fields.push(format!("present={}", codes(present)));
                    }
                }
                fields.push(format!("left={left}"));
                fields.push(format!("right={right}"));
            }
        }
        line(&fields);
    }
    line(&["end".into()]);
    out
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> CartError {
        CartError::MalformedDocument {
            line,
            message: message.into(),
        }
    }

    /// Next line split on tabs, with its 1-based number; the first field
    /// must equal `key`.
    fn expect(&mut self, key: &str) -> Result<(usize, Vec<&'a str>), CartError> {
        let Some((i, text)) = self.lines.next() else {
            return Err(self.err(self.last + 1, format!("unexpected end of document, expected {key}")));
        };
        self.last = i + 1;
        let fields: Vec<&str> = text.split('\t').collect();
        if fields[0] != key {
            return Err(self.err(i + 1, format!("expected {key}, found {:?}", fields[0])));
        }
        Ok((i + 1, fields))
    }
}

fn parse<T: std::str::FromStr>(line: usize, what: &str, text: &str) -> Result<T, CartError> {
    text.parse().map_err(|_| CartError::MalformedDocument {
        line,
        message: format!("cannot parse {what} from {text:?}"),
    })
}

fn parse_codes(line: usize, text: &str) -> Result<Vec<i64>, CartError> {
    text.split(',').map(|c| parse(line, "code", c)).collect()
}

fn key_values<'a>(line: usize, fields: &[&'a str]) -> Result<HashMap<&'a str, &'a str>, CartError> {
    fields
        .iter()
        .map(|f| {
            f.split_once('=').ok_or_else(|| CartError::MalformedDocument {
                line,
                message: format!("expected key=value, found {f:?}"),
            })
        })
        .collect()
}

fn field<'a>(line: usize, map: &HashMap<&str, &'a str>, key: &str) -> Result<&'a str, CartError> {
    map.get(key).copied().ok_or_else(|| CartError::MalformedDocument {
        line,
        message: format!("missing field {key}"),
    })
}

pub fn deserialize(document: &str) -> Result<CartTree, CartError> {
    let mut r = Reader {
        lines: document.lines().enumerate(),
        last: 0,
    };
    let (line, f) = r.expect("format-version")?;
    match f.get(1) {
        Some(&v) if v == FORMAT_VERSION => {}
        Some(&v) => {
            return Err(CartError::VersionMismatch {
                found: v.to_string(),
                expected: FORMAT_VERSION.to_string(),
            })
        }
        None => return Err(r.err(line, "missing format version")),
    }

    let (line, f) = r.expect("target")?;
    let target = f.get(1).ok_or_else(|| r.err(line, "missing target"))?.to_string();
    let (line, f) = r.expect("training-n")?;
    let training_n: usize = parse(line, "training-n", f.get(1).copied().unwrap_or(""))?;

    let (line, f) = r.expect("config")?;
    let kv = key_values(line, &f[1..])?;
    let config = CartConfig {
        min_node_size: parse(line, "min-node-size", field(line, &kv, "min-node-size")?)?,
        max_depth: parse(line, "max-depth", field(line, &kv, "max-depth")?)?,
        min_gini_decrease: parse(line, "min-gini-decrease", field(line, &kv, "min-gini-decrease")?)?,
        mode: match field(line, &kv, "mode")? {
            "classification" => Mode::Classification,
            "regression" => Mode::Regression,
            other => return Err(r.err(line, format!("unknown mode {other:?}"))),
        },
        allow_large_min_node_size: parse(line, "override flag", field(line, &kv, "allow-large-min-node-size")?)?,
    };

    let (line, f) = r.expect("features")?;
    let feature_count: usize = parse(line, "feature count", f.get(1).copied().unwrap_or(""))?;
    let mut features = Vec::with_capacity(feature_count);
    for expected_index in 0..feature_count {
        let (line, f) = r.expect("feature")?;
        if f.len() < 4 {
            return Err(r.err(line, "feature record is too short"));
        }
        let index: usize = parse(line, "feature index", f[1])?;
        if index != expected_index {
            return Err(r.err(line, format!("feature index {index} out of order")));
        }
        let kind = match (f[3], f.get(4)) {
            ("numeric", None) => FeatureKind::Numeric,
            ("categorical", Some(m)) => FeatureKind::Categorical {
                modalities: parse(line, "modality count", m)?,
            },
            _ => return Err(r.err(line, "bad feature kind")),
        };
        features.push(FeatureSpec {
            name: f[2].to_string(),
            kind,
            index,
        });
    }

    let (line, f) = r.expect("nodes")?;
    let node_count: usize = parse(line, "node count", f.get(1).copied().unwrap_or(""))?;
    let mut nodes = Vec::with_capacity(node_count);
    for expected_id in 0..node_count {
        let (line, f) = r.expect("node")?;
        if f.len() < 3 {
            return Err(r.err(line, "node record is too short"));
        }
        let id: usize = parse(line, "node id", f[1])?;
        if id != expected_id {
            return Err(r.err(line, format!("node {id} out of order")));
        }
        let kv = key_values(line, &f[3..])?;
        let n: usize = parse(line, "n", field(line, &kv, "n")?)?;
        let depth: usize = parse(line, "depth", field(line, &kv, "depth")?)?;
        let stats = match config.mode {
            Mode::Classification => {
                let c = field(line, &kv, "counts")?;
                let (a, b) = c.split_once(',').ok_or_else(|| r.err(line, "counts needs two values"))?;
                NodeStats::Classes {
                    counts: [parse(line, "count", a)?, parse(line, "count", b)?],
                }
            }
            Mode::Regression => NodeStats::Values {
                mean: parse(line, "mean", field(line, &kv, "mean")?)?,
                variance: parse(line, "variance", field(line, &kv, "variance")?)?,
            },
        };
        let kind = match (f[2], config.mode) {
            ("leaf", Mode::Classification) => NodeKind::Leaf(LeafValue::Class {
                class: parse(line, "class", field(line, &kv, "class")?)?,
                positive_proportion: parse(line, "proportion", field(line, &kv, "proportion")?)?,
            }),
            ("leaf", Mode::Regression) => NodeKind::Leaf(LeafValue::Mean(parse(line, "value", field(line, &kv, "value")?)?)),
            ("split", _) => {
                let test = match (kv.get("threshold"), kv.get("subset")) {
                    (Some(t), None) => SplitTest::Threshold(parse(line, "threshold", t)?),
                    (None, Some(s)) => SplitTest::Subset {
                        codes: parse_codes(line, s)?,
                        present: parse_codes(line, field(line, &kv, "present")?)?,
                    },
                    _ => return Err(r.err(line, "split needs exactly one of threshold, subset")),
                };
                NodeKind::Split {
                    rule: SplitRule {
                        feature: field(line, &kv, "feature")?.to_string(),
                        test,
                    },
                    left: parse(line, "left", field(line, &kv, "left")?)?,
                    right: parse(line, "right", field(line, &kv, "right")?)?,
                }
            }
            (other, _) => return Err(r.err(line, format!("unknown node kind {other:?}"))),
        };
        nodes.push(Node { n, depth, stats, kind });
    }
    r.expect("end")?;

    let tree = CartTree {
        nodes,
        features,
        target,
        config,
        training_n,
    };
    tree.validate().map_err(|m| r.err(r.last, m))?;
    Ok(tree)
}
