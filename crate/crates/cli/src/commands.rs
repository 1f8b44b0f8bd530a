use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde_json::{json, Value};

use codetree_bench::complexity::complexity;
use codetree_bench::score::{
    aggregate, rank_against, read_leaderboard, render_table, LeaderboardScore,
};
use codetree_bench::{cost, grade, split_holdout, SplitError, SplitOptions};
use codetree_core::agent::{self, RunError, RunOutcome};
use codetree_core::config::{ConfigError, ProviderConfig, RunConfig, Task};
use codetree_core::export;
use codetree_core::journal::{Journal, JournalError};
use codetree_core::operator::{HttpProvider, HttpProviderConfig, PlaybookProvider, Provider};

use crate::args::{AnalyzeCommand, BenchCommand, Command, ExportCommand, Overrides, TreeFormat};
use crate::exit;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or task layout.
    Config(String),
    Provider(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Provider(_) => exit::PROVIDER,
            CliError::Other(_) => exit::FAILURE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Provider(m) | CliError::Other(m) => f.write_str(m),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(_) | RunError::Prompt(_) => CliError::Config(e.to_string()),
            RunError::Provider { .. } => CliError::Provider(e.to_string()),
            RunError::Journal(JournalError::Corrupt(_)) => CliError::Config(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<JournalError> for CliError {
    fn from(e: JournalError) -> Self {
        match e {
            JournalError::Io { .. } => CliError::Other(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn other(e: impl fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

pub fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run(a) => {
            let mut config = match &a.config {
                Some(path) => RunConfig::from_toml_file(path)?,
                None => RunConfig::default(),
            };
            if let Some(ws) = a.workspace {
                config.workspace_dir = ws;
            }
            apply_overrides(&mut config, &a.overrides)?;
            config.workspace_dir = absolute(&config.workspace_dir)?;
            let task_dir = absolute(&a.task)?;
            let task = Task::load(&task_dir)?;
            let mut provider = build_provider(&config.provider, 0)?;
            let outcome = agent::run(&task, &config, provider.as_mut(), &a.out)?;
            Ok(report_outcome(&outcome, &a.out))
        }
        Command::Resume(a) => {
            let journal = Journal::read(&a.journal)?;
            let mut config = journal.config.clone();
            apply_overrides(&mut config, &a.overrides)?;
            let task = Task::load(&journal.task.dir)?;
            let mut provider = build_provider(&config.provider, journal.provider_calls())?;
            let outcome = agent::resume(&a.journal, &task, &config, provider.as_mut())?;
            Ok(report_outcome(&outcome, &a.journal))
        }
        Command::Bench(cmd) => bench(cmd),
        Command::Analyze(cmd) => analyze(cmd),
        Command::Export(ExportCommand::Tree {
            journal,
            format,
            out,
        }) => {
            let tree = Journal::read(&journal)?.tree()?;
            let text = match format {
                TreeFormat::Dot => export::to_dot(&tree),
                TreeFormat::Json => export::to_json(&tree) + "\n",
            };
            match out {
                Some(path) => fs::write(&path, text)
                    .map_err(|e| other(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(exit::OK)
        }
    }
}

fn absolute(path: &Path) -> Result<PathBuf, CliError> {
    std::path::absolute(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn apply_overrides(config: &mut RunConfig, o: &Overrides) -> Result<(), CliError> {
    if let Some(v) = o.steps {
        config.max_steps = v;
    }
    if let Some(v) = o.drafts {
        config.num_drafts = v;
    }
    if let Some(v) = o.debug_depth {
        config.debug_depth_limit = v;
    }
    if let Some(v) = o.timeout {
        config.exec_timeout_secs = v;
    }
    if let Some(v) = o.time_budget {
        config.time_budget_secs = Some(v);
    }
    if o.llm_review {
        config.llm_review = true;
    }
    if let Some(choice) = &o.provider {
        config.provider = parse_provider(choice, &config.provider)?;
    }
    if let ProviderConfig::Playbook { path } = &mut config.provider {
        *path = absolute(path)?;
    }
    config.validate()?;
    Ok(())
}

fn parse_provider(choice: &str, current: &ProviderConfig) -> Result<ProviderConfig, CliError> {
    if let Some(path) = choice.strip_prefix("playbook:") {
        if path.is_empty() {
            return Err(CliError::Config("playbook provider needs a file path".into()));
        }
        return Ok(ProviderConfig::Playbook { path: path.into() });
    }
    match choice {
        "http" => Ok(match current {
            http @ ProviderConfig::Http { .. } => http.clone(),
            ProviderConfig::Playbook { .. } => ProviderConfig::default(),
        }),
        other => Err(CliError::Config(format!(
            "unknown provider `{other}` (expected http or playbook:<file>)"
        ))),
    }
}

/// Builds the provider. Playbooks skip the replies already consumed by the
/// journal being resumed.
fn build_provider(config: &ProviderConfig, consumed: usize) -> Result<Box<dyn Provider>, CliError> {
    match config {
        ProviderConfig::Playbook { path } => {
            let mut p = PlaybookProvider::from_file(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            p.skip(consumed);
            Ok(Box::new(p))
        }
        ProviderConfig::Http {
            endpoint,
            model,
            api_key_env,
            temperature,
            max_tokens,
            request_timeout_secs,
            retry,
        } => {
            let api_key = std::env::var(api_key_env).ok().filter(|k| !k.is_empty());
            if api_key.is_none() {
                warn!("{api_key_env} is not set; sending requests without authorization");
            }
            Ok(Box::new(HttpProvider::new(HttpProviderConfig {
                endpoint: endpoint.clone(),
                model: model.clone(),
                api_key,
                temperature: *temperature,
                max_tokens: *max_tokens,
                request_timeout: std::time::Duration::from_secs_f64(*request_timeout_secs),
                retry: retry.clone(),
            })))
        }
    }
}

fn report_outcome(outcome: &RunOutcome, journal: &Path) -> u8 {
    let buggy = outcome.tree.nodes().iter().filter(|n| n.is_buggy).count();
    println!("nodes: {} ({buggy} buggy)", outcome.tree.len());
    println!("journal: {}", journal.display());
    match &outcome.best {
        Some(best) => {
            println!("best: {} {}", best.id, best.metric.expect("valid node has a metric"));
            exit::OK
        }
        None => {
            println!("best: none");
            exit::ALL_BUGGY
        }
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
}

fn bench(cmd: BenchCommand) -> Result<u8, CliError> {
    match cmd {
        BenchCommand::Split {
            data,
            fraction,
            seed,
            out,
            label,
            id,
            file,
        } => {
            let opts = SplitOptions {
                fraction,
                seed,
                label,
                id,
                file,
            };
            let res = split_holdout(&data, &out, &opts).map_err(|e| match e {
                SplitError::Format(_) => CliError::Config(e.to_string()),
                _ => other(e),
            })?;
            println!(
                "train: {} rows -> {}",
                res.train_rows,
                res.train.display()
            );
            println!(
                "holdout: {} rows -> {} (labels: {})",
                res.holdout_rows,
                res.holdout_inputs.display(),
                res.holdout_labels.display()
            );
            Ok(exit::OK)
        }
        BenchCommand::Score {
            leaderboard,
            direction,
            score,
            submission,
            grader,
            name,
            json,
        } => {
            let agent_score = match (score, submission, grader) {
                (Some(s), _, _) => s,
                (None, Some(sub), Some(cmd)) => grade::grade(&cmd, &sub).map_err(other)?,
                _ => return Err(CliError::Config("give --score or --submission with --grader".into())),
            };
            let board = read_leaderboard(&leaderboard).map_err(other)?;
            let placement =
                rank_against(&board, agent_score, direction.lower_is_better()).map_err(other)?;
            let s = LeaderboardScore::from_placement(placement).map_err(other)?;
            if json {
                print_json(&json!({
                    "task": name,
                    "agent_score": agent_score,
                    "rank": s.rank,
                    "total_teams": s.total_teams,
                    "exceeds_percent": s.exceeds_percent,
                    "above_median": s.above_median,
                }));
            } else {
                println!("agent score: {agent_score}");
                print!("{}", render_table(&[(name, s)]));
            }
            Ok(exit::OK)
        }
        BenchCommand::Aggregate { scores, json } => {
            let mut exceeds = Vec::new();
            for path in &scores {
                exceeds.extend(read_exceeds(path)?);
            }
            let agg = aggregate(&exceeds).map_err(other)?;
            if json {
                print_json(&agg);
            } else {
                println!("tasks: {}", agg.tasks);
                println!("mean exceeds: {:.2}%", agg.mean_exceeds);
                println!("above median: {:.2}%", 100.0 * agg.above_median_fraction);
            }
            Ok(exit::OK)
        }
    }
}

/// Exceeds values from a score report: one JSON object or an array of them.
fn read_exceeds(path: &Path) -> Result<Vec<f64>, CliError> {
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let text = fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let items = match value {
        Value::Array(items) => items,
        single => vec![single],
    };
    items
        .iter()
        .map(|item| {
            item.get("exceeds_percent")
                .and_then(Value::as_f64)
                .ok_or_else(|| bad("missing numeric exceeds_percent".into()))
        })
        .collect()
}

fn analyze(cmd: AnalyzeCommand) -> Result<u8, CliError> {
    match cmd {
        AnalyzeCommand::Complexity { journal, json } => {
            let journal = Journal::read(&journal)?;
            let rows: Vec<_> = journal
                .nodes
                .iter()
                .map(|n| (n, complexity(&n.code)))
                .collect();
            if json {
                let out: Vec<Value> = rows
                    .iter()
                    .map(|(n, r)| json!({"node": n.id, "step": n.created_step, "stage": n.stage, "report": r}))
                    .collect();
                print_json(&out);
            } else {
                println!(
                    "{:<10} {:>5} {:<8} {:>6} {:>6} {:>10} {:>6} {:>7}",
                    "node", "step", "stage", "LOC", "LLOC", "volume", "N1", "MI"
                );
                for (n, r) in &rows {
                    println!(
                        "{:<10} {:>5} {:<8} {:>6} {:>6} {:>10.2} {:>6} {:>7.2}",
                        n.id.as_str(),
                        n.created_step,
                        n.stage.to_string(),
                        r.loc,
                        r.lloc,
                        r.volume,
                        r.total_operators,
                        r.maintainability
                    );
                }
            }
            Ok(exit::OK)
        }
        AnalyzeCommand::Cost {
            journal,
            price_in,
            price_out,
            json,
        } => {
            let journal = Journal::read(&journal)?;
            let record = cost(&journal, price_in, price_out)
                .map_err(|e| CliError::Config(e.to_string()))?;
            for id in &record.missing {
                warn!("{id} has no token counts; charged nothing");
            }
            if json {
                print_json(&record);
            } else {
                println!(
                    "{:<10} {:>5} {:>10} {:>10} {:>12}",
                    "node", "step", "prompt", "completion", "cost"
                );
                for s in &record.steps {
                    let cost = s.cost.map_or("missing".to_string(), |c| format!("{c:.6}"));
                    println!(
                        "{:<10} {:>5} {:>10} {:>10} {:>12}",
                        s.node.as_str(),
                        s.step,
                        s.prompt_tokens,
                        s.completion_tokens,
                        cost
                    );
                }
                println!("total: {:.6}", record.total);
            }
            Ok(exit::OK)
        }
    }
}
