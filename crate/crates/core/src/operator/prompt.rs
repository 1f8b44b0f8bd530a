//! Prompt assembly for the draft, debug and improve entry points.
//!
//! The user text is built from fixed headers and instructions plus five
//! variable sections (task, preview, memory, parent code, execution output).
//! Variable sections share what is left of the prompt cap by weight; a
//! section that needs less than its share returns the slack to the others.

use std::fmt::Write;

use thiserror::Error;

use super::provider::{Message, ProviderRequest, RequestKind};
use crate::context::{DataPreview, MemorySummary};
use crate::model::{Node, Stage};
use crate::policy::PolicyAction;
use crate::text::{truncate_head, truncate_middle};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
}

/// Task-level facts every prompt restates.
#[derive(Debug, Clone)]
pub struct TaskBrief<'a> {
    pub description: &'a str,
    /// How the candidate will be launched, e.g. `python3 working/solution.py`.
    pub run_command: &'a str,
    pub lower_is_better: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub kind: RequestKind,
    pub system: String,
    pub user: String,
}

impl PromptBundle {
    /// Bytes of system plus user text.
    pub fn size(&self) -> usize {
        self.system.len() + self.user.len()
    }

    pub fn to_request(&self) -> ProviderRequest {
        ProviderRequest::new(
            self.kind,
            vec![Message::system(&self.system), Message::user(&self.user)],
        )
    }
}

pub const METRIC_SENTINEL: &str = "VALIDATION_METRIC";
pub const SUBMISSION_PATH: &str = "submission/submission.csv";

const SYSTEM_TEXT: &str = "You are an expert machine learning engineer. You solve tasks by \
writing complete, self-contained single-file programs that train and validate a model on the \
provided data. Answer with a short plan followed by exactly one fenced code block.";

fn direction_words(lower_is_better: bool) -> (&'static str, &'static str) {
    if lower_is_better {
        ("lower is better", "lower")
    } else {
        ("higher is better", "raise")
    }
}

fn requirements(brief: &TaskBrief<'_>) -> String {
    let (dir, _) = direction_words(brief.lower_is_better);
    format!(
        "Program requirements:\n\
         - It is run from the workspace root as `{run}`.\n\
         - Task data is in `./input/` and is read-only. Use `./working/` for scratch files.\n\
         - Hold out a validation split from the training data, evaluate the model on it and print \
         the score on its own line exactly as `{METRIC_SENTINEL}: <number>` ({dir}).\n\
         - Write predictions for the test inputs to `./{SUBMISSION_PATH}`.\n\
         - Do not wait for user input.\n",
        run = brief.run_command,
    )
}

fn instructions(action: &PolicyAction, parent: Option<&Node>, brief: &TaskBrief<'_>) -> String {
    let (dir, verb) = direction_words(brief.lower_is_better);
    let head = match action {
        PolicyAction::Draft => "Write a completely new solution from scratch. Use the previous \
            attempts only to learn what worked; do not copy their code.\n\
            Start with a brief plan (3-5 sentences) naming the model, the feature engineering \
            idea, the validation split and every hyperparameter you choose. Then give one fenced \
            code block with the complete program implementing that plan.\n"
            .to_string(),
        PolicyAction::Debug(_) => "The current solution failed; its execution output is shown \
            above. Inspect the error logs and the trace, find the cause (for example a broken \
            import, mismatched array shapes or a wrong file path) and fix it while keeping the \
            overall approach.\n\
            Start with a brief description of the bug and the fix. Then give one fenced code \
            block with the complete corrected program.\n"
            .to_string(),
        PolicyAction::Improve(_) => {
            let metric = parent
                .and_then(|p| p.metric)
                .map(|m| format!("{:.6}", m.value()))
                .unwrap_or_else(|| "unknown".to_string());
            format!(
                "Improve the current solution by proposing exactly one atomic change, such as \
                 switching the optimizer, adding a regularization technique, a new feature or a \
                 preprocessing step, so that its effect on performance is directly measurable. \
                 Do not combine several changes.\n\
                 The current validation metric is {metric} ({dir}); the goal is to {verb} it.\n\
                 Start with a brief plan that restates this metric goal and names the single \
                 change. Then give one fenced code block with the complete updated program.\n"
            )
        }
    };
    format!("{head}\n{}", requirements(brief))
}

struct Section {
    weight: usize,
    need: usize,
}

/// Splits `budget` bytes across sections by weight, handing the slack of
/// sections that need less than their share to the rest.
fn allocate(budget: usize, sections: &[Section]) -> Vec<usize> {
    let mut alloc = vec![0usize; sections.len()];
    let mut pending: Vec<usize> = (0..sections.len())
        .filter(|&i| sections[i].need > 0)
        .collect();
    let mut remaining = budget;
    while !pending.is_empty() {
        let total_weight: usize = pending.iter().map(|&i| sections[i].weight).sum();
        let share = |i: usize| remaining * sections[i].weight / total_weight.max(1);
        if let Some(pos) = pending.iter().position(|&i| sections[i].need <= share(i)) {
            let i = pending.remove(pos);
            alloc[i] = sections[i].need;
            remaining -= sections[i].need;
            continue;
        }
        for &i in &pending {
            alloc[i] = share(i);
        }
        break;
    }
    alloc
}

/// Assembles the prompt for `action`. System and user text together never
/// exceed `prompt_cap` bytes.
pub fn build_prompt(
    action: &PolicyAction,
    parent: Option<&Node>,
    memory: &MemorySummary,
    preview: &DataPreview,
    brief: &TaskBrief<'_>,
    prompt_cap: usize,
) -> Result<PromptBundle, PromptError> {
    let violation = |msg: &str| Err(PromptError::PreconditionViolation(msg.to_string()));
    match (action, parent) {
        (PolicyAction::Draft, Some(_)) => return violation("draft takes no parent"),
        (PolicyAction::Debug(_) | PolicyAction::Improve(_), None) => {
            return violation("debug and improve need a parent node")
        }
        (PolicyAction::Debug(id) | PolicyAction::Improve(id), Some(p)) if &p.id != id => {
            return violation("parent does not match the action target")
        }
        (PolicyAction::Debug(_), Some(p)) if !p.is_buggy => {
            return violation("debug parent must be buggy")
        }
        (PolicyAction::Improve(_), Some(p)) if p.is_buggy => {
            return violation("improve parent must not be buggy")
        }
        _ => {}
    }

    let stage = action.stage();
    let term_out = match (stage, parent.and_then(|p| p.execution.as_ref())) {
        (Stage::Debug, Some(exec)) => exec.term_out.as_str(),
        _ => "",
    };
    let code = parent.map_or("", |p| p.code.as_str());
    let instructions = instructions(action, parent, brief);

    let code_header = parent
        .map(|p| format!("# Current solution ({})\n```\n", p.id))
        .unwrap_or_default();
    let output_header = "# Execution output of the current solution\n```\n";
    let fixed = [
        SYSTEM_TEXT,
        "# Task\n",
        "\n# Data preview\n",
        "\n# Previous attempts\n",
        "\n",
        code_header.as_str(),
        "\n```\n",
        output_header,
        "\n```\n",
        "\n# Instructions\n",
        instructions.as_str(),
    ]
    .iter()
    .map(|s| s.len())
    .sum::<usize>();
    let budget = prompt_cap.checked_sub(fixed).ok_or_else(|| {
        PromptError::PreconditionViolation(format!(
            "prompt cap {prompt_cap} is smaller than the fixed instruction text ({fixed} bytes)"
        ))
    })?;

    let sections = [
        Section { weight: 20, need: brief.description.len() },
        Section { weight: 15, need: preview.render().len() },
        Section { weight: 15, need: memory.render().len() },
        Section { weight: 35, need: code.len() },
        Section { weight: 15, need: term_out.len() },
    ];
    let alloc = allocate(budget, &sections);

    let task_text = truncate_head(brief.description, alloc[0], "\n[... task description truncated]");
    let preview_text = truncate_head(preview.render(), alloc[1], "\n[... preview truncated]");
    let memory_text = memory.shrink_to(alloc[2]);
    let code_text = truncate_middle(code, alloc[3]);
    let output_text = truncate_middle(term_out, alloc[4]);

    let mut user = String::with_capacity(prompt_cap);
    user.push_str("# Task\n");
    user.push_str(&task_text);
    user.push_str("\n# Data preview\n");
    user.push_str(&preview_text);
    user.push_str("\n# Previous attempts\n");
    user.push_str(memory_text.render());
    user.push('\n');
    if parent.is_some() {
        user.push_str(&code_header);
        user.push_str(&code_text);
        user.push_str("\n```\n");
    }
    if stage == Stage::Debug {
        user.push_str(output_header);
        user.push_str(&output_text);
        user.push_str("\n```\n");
    }
    let _ = write!(user, "\n# Instructions\n{instructions}");
    debug_assert!(SYSTEM_TEXT.len() + user.len() <= prompt_cap);

    Ok(PromptBundle {
        kind: stage.into(),
        system: SYSTEM_TEXT.to_string(),
        user,
    })
}
