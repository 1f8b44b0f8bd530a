//! Persisted run record: one JSON document holding the format version, the
//! effective configuration, the task reference and every node in creation order.

use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RunConfig;
use crate::model::{Node, SolutionTree, TreeError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal I/O on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("journal {path} is not valid JSON: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("unsupported journal format version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt journal: {0}")]
    Corrupt(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRef {
    pub name: String,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Journal {
    pub format_version: u32,
    pub task: TaskRef,
    pub config: RunConfig,
    pub nodes: Vec<Node>,
}

impl Journal {
    pub fn new(task: TaskRef, config: RunConfig, tree: &SolutionTree) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            task,
            config,
            nodes: tree.nodes().to_vec(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, JournalError> {
        let text = fs::read_to_string(path).map_err(|source| JournalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let journal: Journal = serde_json::from_str(&text).map_err(|source| JournalError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        if journal.format_version != FORMAT_VERSION {
            return Err(JournalError::UnsupportedVersion(journal.format_version));
        }
        Ok(journal)
    }

    /// Rebuilds the tree, rejecting any record that breaks a tree invariant.
    pub fn tree(&self) -> Result<SolutionTree, JournalError> {
        Ok(SolutionTree::from_nodes(self.nodes.clone())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("journal serializes")
    }

    /// Writes to a sibling temp file, syncs it, then renames over `path`.
    pub fn write_atomic(&self, path: &Path) -> Result<(), JournalError> {
        let io_err = |source| JournalError::Io {
            path: path.to_path_buf(),
            source,
        };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        let mut file = File::create(&tmp).map_err(io_err)?;
        file.write_all(self.to_json().as_bytes()).map_err(io_err)?;
        file.write_all(b"\n").map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
        fs::rename(&tmp, path).map_err(io_err)?;
        Ok(())
    }

    /// Provider calls recorded across all nodes.
    pub fn provider_calls(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.usage.map_or(0, |u| u.calls as usize))
            .sum()
    }

    /// Copy with wall-clock fields zeroed, for replay comparisons.
    pub fn normalized(&self) -> Self {
        let mut copy = self.clone();
        for node in &mut copy.nodes {
            if let Some(exec) = &mut node.execution {
                exec.exec_time = 0.0;
            }
            if let Some(usage) = &mut node.usage {
                usage.latency = 0.0;
            }
        }
        copy
    }
}
