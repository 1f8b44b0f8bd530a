//! The search loop: select a base node, propose a program, execute and review
//! it, record the node, persist the journal. Repeats until `max_steps` nodes
//! exist or the time budget runs out, then reports the best node.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, Task};
use crate::context::{preview, summarize, DataPreview, PreviewError};
use crate::executor::{ExecError, Executor};
use crate::journal::{Journal, JournalError, TaskRef};
use crate::model::{best_node, Node, NodeId, SolutionTree};
use crate::operator::{
    build_prompt, parse_response, PromptError, Provider, ProviderError, TaskBrief,
};
use crate::policy::{select, PolicyAction};
use crate::reviewer::{review, ReviewVerdict};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Preview(#[from] PreviewError),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    /// The provider failed; the journal holds every completed step.
    #[error("provider failure at step {step}: {source}")]
    Provider { step: u64, source: ProviderError },
    #[error("cannot archive artifacts in {path}: {source}")]
    Artifacts {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    StepLimit,
    TimeBudget,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub best: Option<Node>,
    pub tree: SolutionTree,
    pub steps_run: usize,
    pub stopped: StopReason,
}

/// Directory (under the workspace) where per-node artifacts are archived.
pub const ARCHIVE_DIR: &str = "nodes";
/// Directory (under the workspace) holding the best node's code and submission.
pub const BEST_DIR: &str = "best";

struct Session<'a> {
    config: RunConfig,
    task: &'a Task,
    provider: &'a mut dyn Provider,
    executor: Executor,
    preview: DataPreview,
    tree: SolutionTree,
    journal_path: &'a Path,
}

/// Starts a fresh run. Task settings override the matching config fields.
pub fn run(
    task: &Task,
    config: &RunConfig,
    provider: &mut dyn Provider,
    journal_path: &Path,
) -> Result<RunOutcome, RunError> {
    let mut config = config.clone();
    task.apply_to(&mut config)?;
    Session::open(task, config, provider, journal_path, SolutionTree::new())?.drive()
}

/// Continues the run recorded in `journal_path` until `config.max_steps`.
pub fn resume(
    journal_path: &Path,
    task: &Task,
    config: &RunConfig,
    provider: &mut dyn Provider,
) -> Result<RunOutcome, RunError> {
    let journal = Journal::read(journal_path)?;
    let tree = journal.tree()?;
    let mut config = config.clone();
    task.apply_to(&mut config)?;
    Session::open(task, config, provider, journal_path, tree)?.drive()
}

impl<'a> Session<'a> {
    fn open(
        task: &'a Task,
        config: RunConfig,
        provider: &'a mut dyn Provider,
        journal_path: &'a Path,
        tree: SolutionTree,
    ) -> Result<Self, RunError> {
        config.validate()?;
        let executor = Executor::new(&config, &task.input_dir)?;
        let preview = preview(&executor.workspace().input_dir(), &config.limits)?;
        let session = Self {
            config,
            task,
            provider,
            executor,
            preview,
            tree,
            journal_path,
        };
        session.flush()?;
        Ok(session)
    }

    fn flush(&self) -> Result<(), RunError> {
        let task = TaskRef {
            name: self.task.name.clone(),
            dir: self.task.dir.clone(),
        };
        Journal::new(task, self.config.clone(), &self.tree).write_atomic(self.journal_path)?;
        Ok(())
    }

    fn drive(mut self) -> Result<RunOutcome, RunError> {
        let started = Instant::now();
        let budget = self.config.time_budget_secs.map(Duration::from_secs_f64);
        let target = self.config.max_steps as usize;
        let mut steps_run = 0;
        let mut stopped = StopReason::StepLimit;
        while self.tree.len() < target {
            if budget.is_some_and(|b| started.elapsed() >= b) {
                info!("time budget exhausted after {steps_run} steps");
                stopped = StopReason::TimeBudget;
                break;
            }
            self.step()?;
            self.flush()?;
            steps_run += 1;
        }
        let best = best_node(&self.tree).cloned();
        if let Some(node) = &best {
            self.publish_best(node)?;
        }
        Ok(RunOutcome {
            best,
            tree: self.tree,
            steps_run,
            stopped,
        })
    }

    fn step(&mut self) -> Result<(), RunError> {
        let step = self.tree.last_step() + 1;
        let action = select(&self.tree, &self.config);
        let parent = action.target().and_then(|id| self.tree.get(id)).cloned();
        let memory = summarize(&self.tree, self.config.limits.memory_cap);
        let run_command = self.executor.run_command();
        let brief = TaskBrief {
            description: &self.task.description,
            run_command: &run_command,
            lower_is_better: self.config.lower_is_better,
        };
        let bundle = build_prompt(
            &action,
            parent.as_ref(),
            &memory,
            &self.preview,
            &brief,
            self.config.limits.prompt_cap,
        )?;

        let response = self
            .provider
            .complete(&bundle.to_request())
            .map_err(|source| RunError::Provider { step, source })?;
        let mut usage = response.usage();

        let stage = action.stage();
        let (plan, code, execution, verdict) = match parse_response(&response.text, stage) {
            Err(e) => {
                warn!("step {step}: {e}");
                (String::new(), String::new(), None, ReviewVerdict::buggy(e.to_string()))
            }
            Ok(proposal) => {
                let exec = self.executor.execute(&proposal.code)?;
                let reviewer = self
                    .config
                    .llm_review
                    .then_some(&mut *self.provider as &mut dyn Provider);
                let outcome = review(&exec, self.config.lower_is_better, reviewer)
                    .map_err(|source| RunError::Provider { step, source })?;
                if let Some(u) = &outcome.usage {
                    usage.absorb(u);
                }
                (proposal.plan, proposal.code, Some(exec), outcome.verdict)
            }
        };

        let parent_id = parent.map(|p| p.id);
        let node = Node {
            id: NodeId::for_step(step),
            debug_depth: self.tree.child_debug_depth(parent_id.as_ref()),
            parent_id,
            stage,
            plan,
            code,
            execution,
            metric: verdict.metric,
            is_buggy: verdict.is_buggy,
            summary: verdict.summary,
            created_step: step,
            usage: Some(usage),
        };
        log_step(&action, &node);
        if !node.is_buggy {
            self.archive(&node)?;
        }
        self.tree
            .append(node)
            .map_err(|e| RunError::Journal(JournalError::Corrupt(e)))?;
        Ok(())
    }

    fn archive(&self, node: &Node) -> Result<(), RunError> {
        let dir = self
            .executor
            .workspace()
            .root()
            .join(ARCHIVE_DIR)
            .join(node.id.as_str());
        let io = |source| RunError::Artifacts {
            path: dir.clone(),
            source,
        };
        fs::create_dir_all(&dir).map_err(io)?;
        fs::write(dir.join(&self.config.code_file_name), &node.code).map_err(io)?;
        if let Some(sub) = self.executor.collect_submission() {
            fs::copy(sub, dir.join("submission.csv")).map_err(io)?;
        }
        Ok(())
    }

    fn publish_best(&self, node: &Node) -> Result<(), RunError> {
        let root = self.executor.workspace().root();
        let from = root.join(ARCHIVE_DIR).join(node.id.as_str());
        let to = root.join(BEST_DIR);
        let io = |source| RunError::Artifacts {
            path: to.clone(),
            source,
        };
        if to.exists() {
            fs::remove_dir_all(&to).map_err(io)?;
        }
        fs::create_dir_all(&to).map_err(io)?;
        fs::write(to.join(&self.config.code_file_name), &node.code).map_err(io)?;
        let sub = from.join("submission.csv");
        if sub.is_file() {
            fs::copy(&sub, to.join("submission.csv")).map_err(io)?;
        }
        Ok(())
    }
}

fn log_step(action: &PolicyAction, node: &Node) {
    let base = action
        .target()
        .map_or_else(|| "root".to_string(), NodeId::to_string);
    match &node.metric {
        Some(m) => info!("{} {} from {base}: {m}", node.id, node.stage),
        None => info!("{} {} from {base}: buggy ({})", node.id, node.stage, node.summary),
    }
}
