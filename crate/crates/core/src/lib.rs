//! Tree-search agent for machine learning engineering tasks.
//!
//! A run grows a tree of candidate programs. Each step picks a base node
//! (draft, debug or improve), asks a completion provider for a new program,
//! executes it in a sandboxed workspace and scores the output.

pub mod agent;
pub mod config;
pub mod context;
pub mod executor;
pub mod export;
pub mod journal;
pub mod model;
pub mod operator;
pub mod policy;
pub mod reviewer;
pub mod text;

pub use agent::{resume, run, RunError, RunOutcome, StopReason};
pub use config::{ConfigError, Limits, ProviderConfig, RunConfig, Task};
pub use journal::{Journal, JournalError};
pub use model::{best_node, ExecutionResult, ExitStatus, MetricValue, Node, NodeId, SolutionTree, Stage};
pub use policy::{select, PolicyAction};
