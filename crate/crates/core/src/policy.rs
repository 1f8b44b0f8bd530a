//! The hard-coded search policy: draft, debug or improve.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::model::{best_node, NodeId, SolutionTree, Stage};

/// What the coding operator should do next, and on which base node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "target", rename_all = "snake_case")]
pub enum PolicyAction {
    Draft,
    Debug(NodeId),
    Improve(NodeId),
}

impl PolicyAction {
    pub fn stage(&self) -> Stage {
        match self {
            PolicyAction::Draft => Stage::Draft,
            PolicyAction::Debug(_) => Stage::Debug,
            PolicyAction::Improve(_) => Stage::Improve,
        }
    }

    pub fn target(&self) -> Option<&NodeId> {
        match self {
            PolicyAction::Draft => None,
            PolicyAction::Debug(id) | PolicyAction::Improve(id) => Some(id),
        }
    }
}

/// Picks the next action. Rules, in order:
///
/// 1. draft while fewer than `num_drafts` drafts exist;
/// 2. debug the most recent buggy leaf whose debug depth is below the limit;
/// 3. improve the best valid node;
/// 4. otherwise draft again.
pub fn select(tree: &SolutionTree, config: &RunConfig) -> PolicyAction {
    if tree.draft_count() < config.num_drafts as usize {
        return PolicyAction::Draft;
    }

    let debuggable = tree.nodes().iter().rev().find(|n| {
        n.is_buggy && n.debug_depth < config.debug_depth_limit && tree.is_leaf(&n.id)
    });
    if let Some(node) = debuggable {
        return PolicyAction::Debug(node.id.clone());
    }

    match best_node(tree) {
        Some(best) => PolicyAction::Improve(best.id.clone()),
        None => PolicyAction::Draft,
    }
}
