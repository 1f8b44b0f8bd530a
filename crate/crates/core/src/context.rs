//! Prompt context: a bounded digest of earlier attempts and a static preview
//! of the task's input files.

use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::config::Limits;
use crate::model::{ExitStatus, MetricValue, Node, NodeId, SolutionTree, Stage};
use crate::text::{error_hint, one_line, truncate_head};

const PLAN_DIGEST_MAX: usize = 160;
const HINT_MAX: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Metric(MetricValue),
    Bug(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub node: NodeId,
    pub stage: Stage,
    pub plan: String,
    pub outcome: Outcome,
}

impl MemoryEntry {
    fn from_node(node: &Node) -> Self {
        let outcome = match (&node.metric, node.is_buggy) {
            (Some(metric), false) => Outcome::Metric(*metric),
            _ => Outcome::Bug(one_line(&bug_hint(node), HINT_MAX)),
        };
        let plan = one_line(&node.plan, PLAN_DIGEST_MAX);
        Self {
            node: node.id.clone(),
            stage: node.stage,
            plan: if plan.is_empty() {
                "(no plan given)".to_string()
            } else {
                plan
            },
            outcome,
        }
    }

    fn render(&self) -> String {
        let outcome = match &self.outcome {
            Outcome::Metric(m) => format!("metric {m}"),
            Outcome::Bug(hint) => format!("buggy: {hint}"),
        };
        format!("- {} [{}] {} => {}\n", self.node, self.stage, self.plan, outcome)
    }
}

fn bug_hint(node: &Node) -> String {
    match &node.execution {
        Some(exec) if matches!(exec.exit_status, ExitStatus::NonZeroExit { .. }) => {
            error_hint(&exec.term_out).unwrap_or_else(|| node.summary.clone())
        }
        _ if !node.summary.is_empty() => node.summary.clone(),
        Some(exec) => error_hint(&exec.term_out).unwrap_or_default(),
        None => String::new(),
    }
}

fn elision_marker(count: usize) -> String {
    format!("({count} earlier attempts elided)\n")
}

/// Bounded digest of the attempts recorded so far.
#[derive(Debug, Clone, PartialEq)]
pub struct MemorySummary {
    /// Retained entries in creation order.
    pub entries: Vec<MemoryEntry>,
    /// Number of oldest entries dropped to fit the cap.
    pub elided: usize,
    pub total_chars: usize,
    rendered: String,
}

impl MemorySummary {
    pub fn empty() -> Self {
        Self::fit(Vec::new(), 0, usize::MAX)
    }

    pub fn render(&self) -> &str {
        &self.rendered
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.elided == 0
    }

    /// Further elides the oldest entries until the rendering fits in `cap`.
    pub fn shrink_to(&self, cap: usize) -> MemorySummary {
        if self.total_chars <= cap {
            return self.clone();
        }
        Self::fit(self.entries.clone(), self.elided, cap)
    }

    fn fit(entries: Vec<MemoryEntry>, already_elided: usize, cap: usize) -> Self {
        let lines: Vec<String> = entries.iter().map(MemoryEntry::render).collect();
        let mut suffix_len: Vec<usize> = vec![0; lines.len() + 1];
        for i in (0..lines.len()).rev() {
            suffix_len[i] = suffix_len[i + 1] + lines[i].len();
        }
        let total_entries = already_elided + lines.len();
        let chosen = (0..=lines.len()).find(|&k| {
            let elided = already_elided + k;
            let marker = if elided > 0 { elision_marker(elided).len() } else { 0 };
            marker + suffix_len[k] <= cap
        });

        let (skip, show_marker) = match chosen {
            Some(k) => (k, already_elided + k > 0),
            // Not even the marker fits.
            None => (lines.len(), false),
        };
        let elided = already_elided + skip;
        let mut rendered = String::new();
        if show_marker {
            rendered.push_str(&elision_marker(elided));
        }
        for line in &lines[skip..] {
            rendered.push_str(line);
        }
        debug_assert!(rendered.len() <= cap || total_entries == 0);
        Self {
            entries: entries.into_iter().skip(skip).collect(),
            elided,
            total_chars: rendered.len(),
            rendered,
        }
    }
}

/// Digest of every node in creation order, dropping the oldest entries when
/// the rendering would exceed `cap` bytes.
pub fn summarize(tree: &SolutionTree, cap: usize) -> MemorySummary {
    let entries = tree.nodes().iter().map(MemoryEntry::from_node).collect();
    MemorySummary::fit(entries, 0, cap)
}

#[derive(Debug, Error)]
pub enum PreviewError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FileKind {
    Tabular {
        delimiter: char,
        rows: usize,
        columns: Vec<String>,
        sample: Vec<String>,
    },
    Text {
        head: Vec<String>,
    },
    Directory {
        entries: usize,
    },
    Opaque,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the previewed directory, `/`-separated.
    pub name: String,
    pub size: u64,
    pub kind: FileKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPreview {
    pub files: Vec<FileDigest>,
    rendered: String,
}

impl DataPreview {
    pub fn render(&self) -> &str {
        &self.rendered
    }
}

const MAX_LISTED: usize = 200;
const MAX_COLUMNS: usize = 50;
const SNIFF_BYTES: usize = 8 * 1024;
const TEXT_HEAD_LINES: usize = 3;
const SAMPLE_LINE_MAX: usize = 200;
const DELIMITERS: [char; 4] = [',', '\t', ';', '|'];

/// Static digest of the files under `dir`, capped at `limits.preview_cap` bytes.
pub fn preview(dir: &Path, limits: &Limits) -> Result<DataPreview, PreviewError> {
    let io_err = |path: &Path, source: io::Error| PreviewError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::read_dir(dir).map_err(|e| io_err(dir, e))?;

    let mut files = Vec::new();
    let mut unlisted = 0usize;
    for entry in WalkDir::new(dir).min_depth(1).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(dir).to_path_buf();
            PreviewError::Io {
                path,
                source: e.into(),
            }
        })?;
        if files.len() >= MAX_LISTED {
            unlisted += 1;
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(dir)
            .unwrap_or(entry.path())
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        let path = entry.path();
        if entry.file_type().is_dir() {
            let count = fs::read_dir(path).map_err(|e| io_err(path, e))?.count();
            files.push(FileDigest {
                name: rel,
                size: 0,
                kind: FileKind::Directory { entries: count },
            });
            continue;
        }
        let size = entry.metadata().map_err(|e| io_err(path, e.into()))?.len();
        let kind = classify(path, limits.preview_rows).map_err(|e| io_err(path, e))?;
        files.push(FileDigest {
            name: rel,
            size,
            kind,
        });
    }

    let rendered = render_preview(&files, unlisted, limits.preview_cap);
    Ok(DataPreview { files, rendered })
}

fn classify(path: &Path, sample_rows: usize) -> io::Result<FileKind> {
    let mut head = Vec::with_capacity(SNIFF_BYTES);
    File::open(path)?
        .take(SNIFF_BYTES as u64)
        .read_to_end(&mut head)?;
    if head.contains(&0) {
        return Ok(FileKind::Opaque);
    }
    let text = match std::str::from_utf8(&head) {
        Ok(t) => t,
        // A multi-byte char cut by the sniff window is still text.
        Err(e) if e.error_len().is_none() => std::str::from_utf8(&head[..e.valid_up_to()])
            .expect("prefix validated"),
        Err(_) => return Ok(FileKind::Opaque),
    };

    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    let first_line = text.lines().next().unwrap_or("");
    let delimiter = match ext.as_str() {
        "csv" | "tsv" | "psv" => Some(sniff_delimiter(first_line).unwrap_or(match ext.as_str() {
            "tsv" => '\t',
            "psv" => '|',
            _ => ',',
        })),
        "txt" | "dat" | "data" => sniff_consistent(text),
        _ => None,
    };

    match delimiter {
        Some(d) => tabular_digest(path, d, sample_rows),
        None => Ok(FileKind::Text {
            head: text
                .lines()
                .map(str::trim_end)
                .filter(|l| !l.trim().is_empty())
                .take(TEXT_HEAD_LINES)
                .map(|l| truncate_head(l, SAMPLE_LINE_MAX, "..."))
                .collect(),
        }),
    }
}

fn sniff_delimiter(line: &str) -> Option<char> {
    DELIMITERS
        .iter()
        .map(|&d| (d, line.matches(d).count()))
        .filter(|&(_, n)| n > 0)
        .max_by_key(|&(d, n)| (n, std::cmp::Reverse(d)))
        .map(|(d, _)| d)
}

/// Delimiter for extension-less-hint files: the first two lines must agree.
fn sniff_consistent(text: &str) -> Option<char> {
    let mut lines = text.lines();
    let first = lines.next()?;
    let second = lines.next()?;
    let d = sniff_delimiter(first)?;
    (first.matches(d).count() == second.matches(d).count()).then_some(d)
}

fn tabular_digest(path: &Path, delimiter: char, sample_rows: usize) -> io::Result<FileKind> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .flexible(true)
        .has_headers(true)
        .from_path(path)
        .map_err(csv_to_io)?;
    let columns: Vec<String> = reader
        .headers()
        .map_err(csv_to_io)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = 0usize;
    let mut sample = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(csv_to_io)? {
        if sample.len() < sample_rows {
            let joined = record.iter().collect::<Vec<_>>().join(&delimiter.to_string());
            sample.push(truncate_head(&joined, SAMPLE_LINE_MAX, "..."));
        }
        rows += 1;
    }
    Ok(FileKind::Tabular {
        delimiter,
        rows,
        columns,
        sample,
    })
}

fn csv_to_io(err: csv::Error) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, err)
}

fn human_size(bytes: u64) -> String {
    const UNITS: [&str; 4] = ["KiB", "MiB", "GiB", "TiB"];
    if bytes < 1024 {
        return format!("{bytes} B");
    }
    let mut value = bytes as f64 / 1024.0;
    let mut unit = 0;
    while value >= 1024.0 && unit < UNITS.len() - 1 {
        value /= 1024.0;
        unit += 1;
    }
    format!("{value:.1} {}", UNITS[unit])
}

fn render_preview(files: &[FileDigest], unlisted: usize, cap: usize) -> String {
    use std::fmt::Write;

    let mut out = String::new();
    let _ = writeln!(out, "Input files ({} entries):", files.len() + unlisted);
    for file in files {
        match &file.kind {
            FileKind::Directory { entries } => {
                let _ = writeln!(out, "- {}/ (directory, {entries} entries)", file.name);
            }
            FileKind::Opaque => {
                let _ = writeln!(out, "- {} ({}, opaque)", file.name, human_size(file.size));
            }
            FileKind::Text { head } => {
                let _ = writeln!(out, "- {} ({}, text)", file.name, human_size(file.size));
                for line in head {
                    let _ = writeln!(out, "    {line}");
                }
            }
            FileKind::Tabular {
                rows,
                columns,
                sample,
                ..
            } => {
                let mut cols = columns
                    .iter()
                    .take(MAX_COLUMNS)
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(", ");
                if columns.len() > MAX_COLUMNS {
                    let _ = write!(cols, ", ... (+{} more)", columns.len() - MAX_COLUMNS);
                }
                let _ = writeln!(
                    out,
                    "- {} ({}, tabular): {rows} rows, {} columns [{cols}]",
                    file.name,
                    human_size(file.size),
                    columns.len()
                );
                for row in sample {
                    let _ = writeln!(out, "    {row}");
                }
            }
        }
    }
    if unlisted > 0 {
        let _ = writeln!(out, "... ({unlisted} more entries not listed)");
    }
    truncate_head(&out, cap, "\n... (preview truncated)\n")
}
