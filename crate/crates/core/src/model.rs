//! Domain types shared across the engine: metrics, execution results, nodes
//! and the append-only solution tree.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("metric value must be finite, got {0}")]
    NonFinite(f64),
    #[error("cannot compare metrics with different optimization directions")]
    DirectionMismatch,
    #[error("unknown node `{0}`")]
    UnknownNode(NodeId),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(NodeId),
    #[error("node `{node}` references missing parent `{parent}`")]
    MissingParent { node: NodeId, parent: NodeId },
    #[error("node `{0}`: created_step must strictly increase in insertion order")]
    StepOrder(NodeId),
    #[error("node `{0}`: draft stage must hang off the root and only drafts may")]
    StageMismatch(NodeId),
    #[error("node `{0}`: a metric must be present exactly when the node is not buggy")]
    MetricVerdictMismatch(NodeId),
    #[error("node `{node}`: recorded debug depth {recorded} but derived {derived}")]
    DebugDepth {
        node: NodeId,
        recorded: u32,
        derived: u32,
    },
    #[error("node `{0}`: metric direction differs from the rest of the tree")]
    MixedDirections(NodeId),
}

/// A scalar score together with the direction in which it improves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMetric")]
pub struct MetricValue {
    value: f64,
    lower_is_better: bool,
}

#[derive(Deserialize)]
struct RawMetric {
    value: f64,
    lower_is_better: bool,
}

impl TryFrom<RawMetric> for MetricValue {
    type Error = ModelError;

    fn try_from(raw: RawMetric) -> Result<Self, Self::Error> {
        MetricValue::new(raw.value, raw.lower_is_better)
    }
}

impl MetricValue {
    pub fn new(value: f64, lower_is_better: bool) -> Result<Self, ModelError> {
        if !value.is_finite() {
            return Err(ModelError::NonFinite(value));
        }
        Ok(Self {
            value,
            lower_is_better,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn lower_is_better(&self) -> bool {
        self.lower_is_better
    }

    /// Orders `self` against `other`: `Greater` means `self` is the better score.
    pub fn compare(&self, other: &MetricValue) -> Result<Ordering, ModelError> {
        if self.lower_is_better != other.lower_is_better {
            return Err(ModelError::DirectionMismatch);
        }
        Ok(self.rank_against(other))
    }

    // Both values are finite, so total_cmp agrees with numeric order.
    fn rank_against(&self, other: &MetricValue) -> Ordering {
        if self.lower_is_better {
            other.value.total_cmp(&self.value)
        } else {
            self.value.total_cmp(&other.value)
        }
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = if self.lower_is_better {
            "lower is better"
        } else {
            "higher is better"
        };
        write!(f, "{:.4} ({dir})", self.value)
    }
}

/// Free-function form of [`MetricValue::compare`].
pub fn compare(a: &MetricValue, b: &MetricValue) -> Result<Ordering, ModelError> {
    a.compare(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExitStatus {
    Success,
    NonZeroExit { code: i32 },
    Timeout,
    SpawnError { message: String },
}

impl ExitStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, ExitStatus::Success)
    }
}

/// Captured outcome of running one candidate program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    /// stdout and stderr interleaved in arrival order, head+tail truncated.
    pub term_out: String,
    pub exit_status: ExitStatus,
    /// Wall-clock seconds.
    pub exec_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Draft,
    Debug,
    Improve,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Draft => "draft",
            Stage::Debug => "debug",
            Stage::Improve => "improve",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    /// Identifier assigned to the node created at `step`.
    pub fn for_step(step: u64) -> Self {
        NodeId(format!("node-{step}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Token accounting for the provider calls that produced one node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Number of provider calls folded into this record.
    pub calls: u32,
    /// Wall-clock seconds spent waiting on the provider.
    pub latency: f64,
}

impl TokenUsage {
    pub fn absorb(&mut self, other: &TokenUsage) {
        self.prompt_tokens += other.prompt_tokens;
        self.completion_tokens += other.completion_tokens;
        self.calls += other.calls;
        self.latency += other.latency;
    }
}

/// One candidate solution in the tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    /// `None` means the node hangs directly off the empty root solution.
    pub parent_id: Option<NodeId>,
    pub stage: Stage,
    pub plan: String,
    pub code: String,
    pub execution: Option<ExecutionResult>,
    pub metric: Option<MetricValue>,
    pub is_buggy: bool,
    /// One-line review outcome.
    pub summary: String,
    pub created_step: u64,
    pub debug_depth: u32,
    pub usage: Option<TokenUsage>,
}

/// Append-only tree of nodes rooted at the implicit empty solution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolutionTree {
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
    child_count: Vec<usize>,
}

impl SolutionTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a tree from stored records, checking every invariant.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self, TreeError> {
        let mut tree = Self::new();
        for node in nodes {
            tree.append(node)?;
        }
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: &NodeId) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn is_leaf(&self, id: &NodeId) -> bool {
        self.index
            .get(id)
            .is_some_and(|&i| self.child_count[i] == 0)
    }

    pub fn children<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Node> + 'a {
        self.nodes
            .iter()
            .filter(move |n| n.parent_id.as_ref() == Some(id))
    }

    pub fn last_step(&self) -> u64 {
        self.nodes.last().map_or(0, |n| n.created_step)
    }

    pub fn draft_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.stage == Stage::Draft).count()
    }

    /// Debug depth a new child of `parent` would have.
    pub fn child_debug_depth(&self, parent: Option<&NodeId>) -> u32 {
        let mut depth = 0;
        let mut cursor = parent.and_then(|p| self.get(p));
        while let Some(node) = cursor {
            if !node.is_buggy {
                break;
            }
            depth += 1;
            cursor = node.parent_id.as_ref().and_then(|p| self.get(p));
        }
        depth
    }

    /// Appends a node after validating it against the tree invariants.
    pub fn append(&mut self, node: Node) -> Result<&Node, TreeError> {
        if self.index.contains_key(&node.id) {
            return Err(TreeError::DuplicateId(node.id));
        }
        if let Some(parent) = &node.parent_id {
            if !self.index.contains_key(parent) {
                return Err(TreeError::MissingParent {
                    node: node.id.clone(),
                    parent: parent.clone(),
                });
            }
        }
        if self
            .nodes
            .last()
            .is_some_and(|last| node.created_step <= last.created_step)
        {
            return Err(TreeError::StepOrder(node.id));
        }
        if (node.stage == Stage::Draft) != node.parent_id.is_none() {
            return Err(TreeError::StageMismatch(node.id));
        }
        if node.metric.is_some() == node.is_buggy {
            return Err(TreeError::MetricVerdictMismatch(node.id));
        }
        if let Some(metric) = &node.metric {
            let existing = self.nodes.iter().find_map(|n| n.metric.as_ref());
            if existing.is_some_and(|m| m.lower_is_better() != metric.lower_is_better()) {
                return Err(TreeError::MixedDirections(node.id));
            }
        }
        let derived = self.child_debug_depth(node.parent_id.as_ref());
        if derived != node.debug_depth {
            return Err(TreeError::DebugDepth {
                node: node.id,
                recorded: node.debug_depth,
                derived,
            });
        }

        if let Some(parent) = &node.parent_id {
            let pi = self.index[parent];
            self.child_count[pi] += 1;
        }
        let i = self.nodes.len();
        self.index.insert(node.id.clone(), i);
        self.nodes.push(node);
        self.child_count.push(0);
        Ok(&self.nodes[i])
    }
}

/// Best non-buggy node; ties go to the earliest `created_step`.
pub fn best_node(tree: &SolutionTree) -> Option<&Node> {
    let mut best: Option<(&Node, &MetricValue)> = None;
    for node in tree.nodes() {
        let Some(metric) = node.metric.as_ref().filter(|_| !node.is_buggy) else {
            continue;
        };
        match best {
            Some((_, current)) if metric.rank_against(current) != Ordering::Greater => {}
            _ => best = Some((node, metric)),
        }
    }
    best.map(|(n, _)| n)
}

/// Number of consecutive buggy ancestors above `id`, starting at its parent.
pub fn debug_depth_of(tree: &SolutionTree, id: &NodeId) -> Result<u32, ModelError> {
    let node = tree
        .get(id)
        .ok_or_else(|| ModelError::UnknownNode(id.clone()))?;
    Ok(tree.child_debug_depth(node.parent_id.as_ref()))
}
