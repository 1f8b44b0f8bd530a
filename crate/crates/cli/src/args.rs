use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "codetree", version, about = "Tree-search agent for machine learning tasks")]
pub struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Start a new search run on a task directory.
    Run(RunArgs),
    /// Continue an interrupted run from its journal.
    Resume(ResumeArgs),
    /// Benchmark protocol: splits, leaderboard scoring, aggregation.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Per-step reports over a journal.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Render a journal for visualization.
    #[command(subcommand)]
    Export(ExportCommand),
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Total number of nodes to grow.
    #[arg(long)]
    pub steps: Option<u32>,
    /// Number of initial drafts.
    #[arg(long)]
    pub drafts: Option<u32>,
    /// Maximum consecutive debug attempts on one chain.
    #[arg(long = "debug-depth")]
    pub debug_depth: Option<u32>,
    /// Per-execution timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Wall-clock budget for the whole run in seconds.
    #[arg(long = "time-budget")]
    pub time_budget: Option<f64>,
    /// `http` or `playbook:<file>`.
    #[arg(long)]
    pub provider: Option<String>,
    /// Ask the provider to review runs that print no metric line.
    #[arg(long = "llm-review")]
    pub llm_review: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Task directory holding task.md, optional task.toml and input/.
    #[arg(long)]
    pub task: PathBuf,
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Journal file to write.
    #[arg(long, default_value = "journal.json")]
    pub out: PathBuf,
    /// Workspace directory for executions and artifacts.
    #[arg(long)]
    pub workspace: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    #[arg(long)]
    pub journal: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    pub fn lower_is_better(self) -> bool {
        matches!(self, Direction::Min)
    }
}

#[derive(Debug, Subcommand)]
pub enum BenchCommand {
    /// Split a labeled table into agent-train rows and a label-free holdout.
    Split {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        fraction: f64,
        #[arg(long)]
        seed: u64,
        /// Destination directory.
        #[arg(long, default_value = "split")]
        out: PathBuf,
        /// Label column (default: last column).
        #[arg(long)]
        label: Option<String>,
        /// Row id column (default: synthesized row_id).
        #[arg(long)]
        id: Option<String>,
        /// Table file name when the directory holds several.
        #[arg(long)]
        file: Option<String>,
    },
    /// Place an agent score on a human leaderboard.
    Score {
        #[arg(long)]
        leaderboard: PathBuf,
        #[arg(long, value_enum)]
        direction: Direction,
        /// Agent score, when already known.
        #[arg(long, conflicts_with_all = ["submission", "grader"], required_unless_present = "submission")]
        score: Option<f64>,
        /// Submission file to grade.
        #[arg(long, requires = "grader")]
        submission: Option<PathBuf>,
        /// Grader command containing `{submission}`; prints a metric line.
        #[arg(long, requires = "submission")]
        grader: Option<String>,
        /// Task name recorded in the report.
        #[arg(long, default_value = "task")]
        name: String,
        #[arg(long)]
        json: bool,
    },
    /// Average exceeds percentages over score reports.
    Aggregate {
        /// JSON reports written by `bench score --json`.
        #[arg(long, num_args = 1.., required = true)]
        scores: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// LOC, LLOC, Halstead and maintainability per node.
    Complexity {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Provider token cost per node.
    Cost {
        #[arg(long)]
        journal: PathBuf,
        /// Price per prompt token.
        #[arg(long = "price-in")]
        price_in: f64,
        /// Price per completion token.
        #[arg(long = "price-out")]
        price_out: f64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TreeFormat {
    Dot,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum ExportCommand {
    /// Solution tree as Graphviz DOT or JSON.
    Tree {
        #[arg(long)]
        journal: PathBuf,
        #[arg(long, value_enum, default_value = "dot")]
        format: TreeFormat,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}
