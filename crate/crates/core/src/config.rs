//! Run configuration and task descriptors.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// Placeholder replaced by the candidate file path in interpreter commands.
pub const FILE_PLACEHOLDER: &str = "{file}";

/// Byte caps applied to captured and generated text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    /// Captured stdout+stderr per execution.
    pub term_out_cap: usize,
    /// Rendered memory summary.
    pub memory_cap: usize,
    /// Rendered data preview.
    pub preview_cap: usize,
    /// System plus user text of a prompt.
    pub prompt_cap: usize,
    /// Rows sampled per tabular file in the data preview.
    pub preview_rows: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            term_out_cap: 64 * 1024,
            memory_cap: 8 * 1024,
            preview_cap: 4 * 1024,
            prompt_cap: 32 * 1024,
            preview_rows: 3,
        }
    }
}

/// Smallest prompt cap that still leaves room for the fixed instruction text.
pub const MIN_PROMPT_CAP: usize = 4 * 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_delay_ms: u64,
    pub max_delay_ms: u64,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 5,
            initial_delay_ms: 1000,
            max_delay_ms: 60_000,
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (zero-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.max(1.0).powi(attempt as i32);
        let ms = (self.initial_delay_ms as f64 * factor).min(self.max_delay_ms as f64);
        Duration::from_millis(ms as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderConfig {
    /// Scripted replies from a JSON file.
    Playbook { path: PathBuf },
    /// Chat-completions style JSON endpoint.
    Http {
        endpoint: String,
        model: String,
        /// Environment variable holding the bearer token.
        #[serde(default = "default_api_key_env")]
        api_key_env: String,
        #[serde(default = "default_temperature")]
        temperature: f64,
        #[serde(default)]
        max_tokens: Option<u32>,
        #[serde(default = "default_request_timeout")]
        request_timeout_secs: f64,
        #[serde(default)]
        retry: RetryPolicy,
    },
}

fn default_api_key_env() -> String {
    "CODETREE_API_KEY".to_string()
}

fn default_temperature() -> f64 {
    0.5
}

fn default_request_timeout() -> f64 {
    300.0
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig::Http {
            endpoint: "http://localhost:8000/v1/chat/completions".to_string(),
            model: "default".to_string(),
            api_key_env: default_api_key_env(),
            temperature: default_temperature(),
            max_tokens: None,
            request_timeout_secs: default_request_timeout(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Desired number of initial drafts.
    pub num_drafts: u32,
    /// Consecutive failed fixes allowed on one branch.
    pub debug_depth_limit: u32,
    /// Total number of search steps.
    pub max_steps: u32,
    /// Wall-clock budget for the whole run, checked between steps.
    pub time_budget_secs: Option<f64>,
    pub exec_timeout_secs: f64,
    /// Time between the soft terminate and the hard kill on timeout.
    pub grace_secs: f64,
    /// Command template; `{file}` is replaced by the candidate path.
    pub interpreter_command: String,
    /// File name the candidate is written to inside the scratch directory.
    pub code_file_name: String,
    pub lower_is_better: bool,
    /// Ask the provider to review output that lacks the metric sentinel.
    pub llm_review: bool,
    pub limits: Limits,
    pub provider: ProviderConfig,
    pub workspace_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            num_drafts: 5,
            debug_depth_limit: 3,
            max_steps: 20,
            time_budget_secs: None,
            exec_timeout_secs: 600.0,
            grace_secs: 1.0,
            interpreter_command: format!("python3 {FILE_PLACEHOLDER}"),
            code_file_name: "solution.py".to_string(),
            lower_is_better: false,
            llm_review: false,
            limits: Limits::default(),
            provider: ProviderConfig::default(),
            workspace_dir: PathBuf::from("workspace"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.num_drafts == 0 {
            return bad("num_drafts must be positive".into());
        }
        // A zero-step run is a valid no-op; the draft quota only binds real runs.
        if self.max_steps > 0 && self.num_drafts > self.max_steps {
            return bad(format!(
                "num_drafts ({}) exceeds max_steps ({})",
                self.num_drafts, self.max_steps
            ));
        }
        if self.debug_depth_limit == 0 {
            return bad("debug_depth_limit must be at least 1".into());
        }
        if !(self.exec_timeout_secs.is_finite() && self.exec_timeout_secs > 0.0) {
            return bad("exec_timeout_secs must be positive".into());
        }
        if !(self.grace_secs.is_finite() && self.grace_secs >= 0.0) {
            return bad("grace_secs must be nonnegative".into());
        }
        if let Some(budget) = self.time_budget_secs {
            if !(budget.is_finite() && budget > 0.0) {
                return bad("time_budget_secs must be positive".into());
            }
        }
        if !self.interpreter_command.contains(FILE_PLACEHOLDER) {
            return bad(format!(
                "interpreter_command must contain the {FILE_PLACEHOLDER} placeholder"
            ));
        }
        if shlex::split(&self.interpreter_command).is_none_or(|argv| argv.is_empty()) {
            return bad("interpreter_command is not a valid command line".into());
        }
        if self.code_file_name.is_empty() || self.code_file_name.contains('/') {
            return bad("code_file_name must be a plain file name".into());
        }
        if self.limits.prompt_cap < MIN_PROMPT_CAP {
            return bad(format!("prompt_cap must be at least {MIN_PROMPT_CAP} bytes"));
        }
        if self.limits.term_out_cap < 256 {
            return bad("term_out_cap must be at least 256 bytes".into());
        }
        Ok(())
    }

    pub fn exec_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.exec_timeout_secs)
    }

    pub fn grace(&self) -> Duration {
        Duration::from_secs_f64(self.grace_secs)
    }
}

/// Optional key/values stored next to `task.md`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSettings {
    pub name: Option<String>,
    /// `"min"` or `"max"`.
    pub direction: Option<String>,
    pub interpreter: Option<String>,
    pub code_file_name: Option<String>,
    /// Directory (relative to the task dir) the agent may read.
    pub input_dir: Option<PathBuf>,
}

/// A task descriptor directory: `task.md`, optional `task.toml`, and an input
/// data directory (default `input/`).
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub dir: PathBuf,
    pub name: String,
    pub description: String,
    pub input_dir: PathBuf,
    pub settings: TaskSettings,
}

impl Task {
    pub fn load(dir: &Path) -> Result<Self, ConfigError> {
        let md = dir.join("task.md");
        let description = fs::read_to_string(&md).map_err(|source| ConfigError::Io {
            path: md.clone(),
            source,
        })?;
        let toml_path = dir.join("task.toml");
        let settings: TaskSettings = if toml_path.exists() {
            let text = fs::read_to_string(&toml_path).map_err(|source| ConfigError::Io {
                path: toml_path.clone(),
                source,
            })?;
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: toml_path.clone(),
                message: e.to_string(),
            })?
        } else {
            TaskSettings::default()
        };
        if let Some(dir) = &settings.direction {
            parse_direction(dir)?;
        }
        let input_dir = dir.join(settings.input_dir.clone().unwrap_or_else(|| "input".into()));
        if !input_dir.is_dir() {
            return Err(ConfigError::Invalid(format!(
                "task input directory {} does not exist",
                input_dir.display()
            )));
        }
        let name = settings.name.clone().unwrap_or_else(|| {
            dir.file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "task".to_string())
        });
        Ok(Self {
            dir: dir.to_path_buf(),
            name,
            description,
            input_dir,
            settings,
        })
    }

    /// Task-level overrides take precedence over the run defaults.
    pub fn apply_to(&self, config: &mut RunConfig) -> Result<(), ConfigError> {
        if let Some(dir) = &self.settings.direction {
            config.lower_is_better = parse_direction(dir)?;
        }
        if let Some(cmd) = &self.settings.interpreter {
            config.interpreter_command = cmd.clone();
        }
        if let Some(file) = &self.settings.code_file_name {
            config.code_file_name = file.clone();
        }
        Ok(())
    }
}

/// Parses `min`/`max` into a lower-is-better flag.
pub fn parse_direction(text: &str) -> Result<bool, ConfigError> {
    match text.trim().to_ascii_lowercase().as_str() {
        "min" | "minimize" | "lower" => Ok(true),
        "max" | "maximize" | "higher" => Ok(false),
        other => Err(ConfigError::Invalid(format!(
            "unknown metric direction `{other}` (expected min or max)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_knobs() {
        let base = RunConfig::default();
        let cases = [
            RunConfig {
                num_drafts: 30,
                max_steps: 10,
                ..base.clone()
            },
            RunConfig {
                debug_depth_limit: 0,
                ..base.clone()
            },
            RunConfig {
                exec_timeout_secs: 0.0,
                ..base.clone()
            },
            RunConfig {
                interpreter_command: "python3 main.py".into(),
                ..base.clone()
            },
            RunConfig {
                limits: Limits {
                    prompt_cap: 100,
                    ..Limits::default()
                },
                ..base.clone()
            },
        ];
        for cfg in cases {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        let zero = RunConfig {
            max_steps: 0,
            ..base
        };
        zero.validate().unwrap();
    }

    #[test]
    fn retry_delay_grows_and_caps() {
        let policy = RetryPolicy {
            max_retries: 5,
            initial_delay_ms: 100,
            max_delay_ms: 350,
            multiplier: 2.0,
        };
        assert_eq!(policy.delay(0), Duration::from_millis(100));
        assert_eq!(policy.delay(1), Duration::from_millis(200));
        assert_eq!(policy.delay(2), Duration::from_millis(350));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let text = r#"
            num_drafts = 2
            max_steps = 4
            interpreter_command = "sh {file}"

            [limits]
            prompt_cap = 8192

            [provider]
            kind = "playbook"
            path = "script.json"
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.num_drafts, 2);
        assert_eq!(cfg.limits.prompt_cap, 8192);
        assert_eq!(cfg.limits.memory_cap, Limits::default().memory_cap);
        assert_eq!(
            cfg.provider,
            ProviderConfig::Playbook {
                path: "script.json".into()
            }
        );
    }

    #[test]
    fn http_provider_needs_only_endpoint_and_model() {
        let text = "[provider]\nkind = \"http\"\nendpoint = \"http://127.0.0.1:9/v1/chat/completions\"\nmodel = \"m\"\n";
        let cfg: RunConfig = toml::from_str(text).unwrap();
        match cfg.provider {
            ProviderConfig::Http {
                api_key_env,
                request_timeout_secs,
                retry,
                ..
            } => {
                assert_eq!(api_key_env, "CODETREE_API_KEY");
                assert_eq!(request_timeout_secs, 300.0);
                assert_eq!(retry, RetryPolicy::default());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn task_loads_overrides() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("task.md"), "Predict y.").unwrap();
        fs::write(
            dir.path().join("task.toml"),
            "name = \"toy\"\ndirection = \"min\"\ninterpreter = \"sh {file}\"\n",
        )
        .unwrap();
        fs::create_dir(dir.path().join("input")).unwrap();
        let task = Task::load(dir.path()).unwrap();
        assert_eq!(task.name, "toy");
        let mut cfg = RunConfig::default();
        task.apply_to(&mut cfg).unwrap();
        assert!(cfg.lower_is_better);
        assert_eq!(cfg.interpreter_command, "sh {file}");
    }

    #[test]
    fn task_without_input_dir_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("task.md"), "x").unwrap();
        assert!(matches!(Task::load(dir.path()), Err(ConfigError::Invalid(_))));
    }
}
