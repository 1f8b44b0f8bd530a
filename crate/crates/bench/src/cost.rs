//! Provider cost accounting over a journal.

use serde::Serialize;
use thiserror::Error;

use codetree_core::journal::Journal;
use codetree_core::model::NodeId;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("token price must be finite and non-negative, got {0}")]
    InvalidPrice(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepCost {
    pub node: NodeId,
    pub step: u64,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// `None` when the step has no token counts; such steps are not charged.
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRecord {
    pub price_in: f64,
    pub price_out: f64,
    pub steps: Vec<StepCost>,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total: f64,
    /// Steps lacking token data.
    pub missing: Vec<NodeId>,
}

pub fn cost(journal: &Journal, price_in: f64, price_out: f64) -> Result<CostRecord, CostError> {
    for price in [price_in, price_out] {
        if !price.is_finite() || price < 0.0 {
            return Err(CostError::InvalidPrice(price));
        }
    }
    let mut record = CostRecord {
        price_in,
        price_out,
        steps: Vec::with_capacity(journal.nodes.len()),
        prompt_tokens: 0,
        completion_tokens: 0,
        total: 0.0,
        missing: Vec::new(),
    };
    for node in &journal.nodes {
        let (p, c, charge) = match node.usage {
            Some(u) => {
                let charge = u.prompt_tokens as f64 * price_in + u.completion_tokens as f64 * price_out;
                record.prompt_tokens += u.prompt_tokens;
                record.completion_tokens += u.completion_tokens;
                record.total += charge;
                (u.prompt_tokens, u.completion_tokens, Some(charge))
            }
            None => {
                record.missing.push(node.id.clone());
                (0, 0, None)
            }
        };
        record.steps.push(StepCost {
            node: node.id.clone(),
            step: node.created_step,
            prompt_tokens: p,
            completion_tokens: c,
            cost: charge,
        });
    }
    Ok(record)
}
