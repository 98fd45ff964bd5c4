use super::{CartTree, LeafValue, Node, NodeKind, NodeStats};

fn stats_label(node: &Node) -> String {
    match &node.stats {
        NodeStats::Classes { counts } => format!("n = {}\\ncounts = [{}, {}]", node.n, counts[0], counts[1]),
        NodeStats::Values { mean, variance } => format!("n = {}\\nmean = {mean:.4}, var = {variance:.4}", node.n),
    }
}

fn leaf_label(value: &LeafValue) -> String {
    match value {
        LeafValue::Class { class, positive_proportion } => format!("class {class} (p1 = {positive_proportion:.4})"),
        LeafValue::Mean(m) => format!("value {m:.4}"),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz digraph, one box per node; edges to the left child are
/// labelled `True` and to the right child `False`.
pub fn export_dot(tree: &CartTree) -> String {
    let mut out = String::from("digraph cart {\n    node [shape=box];\n");
    for (i, node) in tree.nodes.iter().enumerate() {
        let head = match &node.kind {
            NodeKind::Split { rule, .. } => escape(&rule.describe()),
            NodeKind::Leaf(v) => leaf_label(v),
        };
        out.push_str(&format!("    n{i} [label=\"{head}\\n{}\"];\n", stats_label(node)));
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        if let NodeKind::Split { left, right, .. } = node.kind {
            out.push_str(&format!("    n{i} -> n{left} [label=\"True\"];\n"));
            out.push_str(&format!("    n{i} -> n{right} [label=\"False\"];\n"));
        }
    }
    out.push_str("}\n");
    out
}

/// Indented outline of the tree.
pub fn export_text(tree: &CartTree) -> String {
    let mut out = String::new();
    write_node(tree, 0, "", 0, &mut out);
    out
}

fn write_node(tree: &CartTree, id: usize, branch: &str, indent: usize, out: &mut String) {
    let node = &tree.nodes[id];
    let stats = stats_label(node).replace("\\n", ", ");
    let pad = "    ".repeat(indent);
    match &node.kind {
        NodeKind::Leaf(v) => out.push_str(&format!("{pad}{branch}[{id}] leaf: {} ({stats})\n", leaf_label(v))),
        NodeKind::Split { rule, left, right } => {
            out.push_str(&format!("{pad}{branch}[{id}] {} ({stats})\n", rule.describe()));
            write_node(tree, *left, "True: ", indent + 1, out);
            write_node(tree, *right, "False: ", indent + 1, out);
        }
    }
}
