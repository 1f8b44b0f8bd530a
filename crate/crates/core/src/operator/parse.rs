use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Stage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("provider response is empty")]
    EmptyResponse,
    #[error("the largest code block in the response is empty")]
    EmptyCode,
}

/// Plan and program text extracted from a completion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub plan: String,
    pub code: String,
    pub mode: Stage,
}

const FENCE: &str = "```";

fn is_fence(line: &str) -> bool {
    line.trim_start().starts_with(FENCE)
}

/// Splits a completion into plan and code.
///
/// The largest fenced block (first one on ties) is the code and everything
/// before the first fence is the plan. Without any fence the whole text is
/// code. An unterminated fence runs to the end of the text.
pub fn parse_response(text: &str, mode: Stage) -> Result<Proposal, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::EmptyResponse);
    }
    let lines: Vec<&str> = text.split('\n').collect();
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, line) in lines.iter().enumerate() {
        if !is_fence(line) {
            continue;
        }
        match open.take() {
            None => open = Some(i + 1),
            Some(start) => blocks.push((start, i)),
        }
    }
    if let Some(start) = open {
        blocks.push((start, lines.len()));
    }

    let Some(first_fence) = blocks.first().map(|&(start, _)| start - 1) else {
        return Ok(Proposal {
            plan: String::new(),
            code: text.trim().to_string(),
            mode,
        });
    };

    let block_len = |&(s, e): &(usize, usize)| -> usize {
        lines[s..e].iter().map(|l| l.len() + 1).sum()
    };
    let mut best = blocks[0];
    for block in &blocks[1..] {
        if block_len(block) > block_len(&best) {
            best = *block;
        }
    }
    let code = lines[best.0..best.1].join("\n");
    if code.trim().is_empty() {
        return Err(ParseError::EmptyCode);
    }
    let plan = lines[..first_fence].join("\n").trim().to_string();
    Ok(Proposal { plan, code, mode })
}

/// Inverse of [`parse_response`] for a plan and a single code block.
pub fn render_proposal(plan: &str, code: &str) -> String {
    format!("{plan}\n\n{FENCE}\n{code}\n{FENCE}\n")
}
