//! Tree export for visualization: Graphviz DOT and a flat JSON graph.
//! The implicit root is rendered as `s0`.

use serde::Serialize;

use crate::model::{Node, SolutionTree};

pub const ROOT_LABEL: &str = "s0";

fn node_label(node: &Node) -> String {
    match &node.metric {
        Some(m) => format!("{}\\n{}\\nmetric {:.4}", node.id, node.stage, m.value()),
        None => format!("{}\\n{}\\nbuggy", node.id, node.stage),
    }
}

fn escape(text: &str) -> String {
    text.replace('"', "\\\"")
}

pub fn to_dot(tree: &SolutionTree) -> String {
    let mut out = String::from("digraph solution_tree {\n  rankdir=TB;\n");
    out.push_str(&format!("  \"{ROOT_LABEL}\" [label=\"{ROOT_LABEL}\", shape=circle];\n"));
    let best = crate::model::best_node(tree).map(|n| n.id.clone());
    for node in tree.nodes() {
        let style = if node.is_buggy {
            ", style=dashed, color=red"
        } else if Some(&node.id) == best.as_ref() {
            ", style=bold, color=darkgreen"
        } else {
            ""
        };
        out.push_str(&format!(
            "  \"{}\" [label=\"{}\", shape=box{style}];\n",
            escape(node.id.as_str()),
            escape(&node_label(node))
        ));
    }
    for node in tree.nodes() {
        let from = node
            .parent_id
            .as_ref()
            .map_or(ROOT_LABEL, |p| p.as_str());
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
            escape(from),
            escape(node.id.as_str()),
            node.stage
        ));
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Serialize)]
pub struct GraphNode<'a> {
    pub id: &'a str,
    pub stage: Option<String>,
    pub metric: Option<f64>,
    pub is_buggy: bool,
    pub created_step: u64,
}

#[derive(Debug, Serialize)]
pub struct GraphEdge<'a> {
    pub from: &'a str,
    pub to: &'a str,
    pub stage: String,
}

#[derive(Debug, Serialize)]
pub struct Graph<'a> {
    pub root: &'a str,
    pub best: Option<&'a str>,
    pub nodes: Vec<GraphNode<'a>>,
    pub edges: Vec<GraphEdge<'a>>,
}

pub fn to_graph(tree: &SolutionTree) -> Graph<'_> {
    let mut nodes = vec![GraphNode {
        id: ROOT_LABEL,
        stage: None,
        metric: None,
        is_buggy: false,
        created_step: 0,
    }];
    let mut edges = Vec::with_capacity(tree.len());
    for node in tree.nodes() {
        nodes.push(GraphNode {
            id: node.id.as_str(),
            stage: Some(node.stage.to_string()),
            metric: node.metric.map(|m| m.value()),
            is_buggy: node.is_buggy,
            created_step: node.created_step,
        });
        edges.push(GraphEdge {
            from: node.parent_id.as_ref().map_or(ROOT_LABEL, |p| p.as_str()),
            to: node.id.as_str(),
            stage: node.stage.to_string(),
        });
    }
    Graph {
        root: ROOT_LABEL,
        best: crate::model::best_node(tree).map(|n| n.id.as_str()),
        nodes,
        edges,
    }
}

pub fn to_json(tree: &SolutionTree) -> String {
    serde_json::to_string_pretty(&to_graph(tree)).expect("graph serializes")
}
