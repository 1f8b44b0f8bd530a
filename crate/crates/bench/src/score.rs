//! Leaderboard-relative scoring.
//!
//! An agent's score is placed on a human leaderboard: `rank` is one plus the
//! number of entries strictly better than it, and the headline number is the
//! share of the leaderboard it beats, `100 * (1 - rank / total)`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("rank {rank} is outside 1..={total}")]
    Range { rank: u64, total: u64 },
    #[error("leaderboard is empty")]
    EmptyLeaderboard,
    #[error("non-finite score {0}")]
    NonFinite(f64),
    #[error("no scores to aggregate")]
    EmptyInput,
    #[error("exceeds percentage {0} is outside [0, 100]")]
    ExceedsRange(f64),
    #[error("cannot read leaderboard {path}: {message}")]
    Leaderboard { path: String, message: String },
}

/// Rounds half away from zero to two decimals, the reporting precision.
pub fn round2(value: f64) -> f64 {
    (value * 100.0).round() / 100.0
}

/// Share of the leaderboard beaten, in percent.
pub fn exceeds_percent(rank: u64, total: u64) -> Result<f64, ScoreError> {
    if rank == 0 || rank > total {
        return Err(ScoreError::Range { rank, total });
    }
    Ok(100.0 * (1.0 - rank as f64 / total as f64))
}

pub fn above_median(exceeds: f64) -> bool {
    exceeds > 50.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub rank: u64,
    pub total: u64,
}

/// Places `agent` on `leaderboard`. Ties do not outrank the agent. An agent
/// worse than every entry gets the last rank rather than `total + 1`.
pub fn rank_against(
    leaderboard: &[f64],
    agent: f64,
    lower_is_better: bool,
) -> Result<Placement, ScoreError> {
    if leaderboard.is_empty() {
        return Err(ScoreError::EmptyLeaderboard);
    }
    if let Some(&bad) = leaderboard
        .iter()
        .chain(std::iter::once(&agent))
        .find(|v| !v.is_finite())
    {
        return Err(ScoreError::NonFinite(bad));
    }
    let better = leaderboard
        .iter()
        .filter(|&&s| if lower_is_better { s < agent } else { s > agent })
        .count() as u64;
    let total = leaderboard.len() as u64;
    Ok(Placement {
        rank: (1 + better).min(total),
        total,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardScore {
    pub rank: u64,
    pub total_teams: u64,
    pub exceeds_percent: f64,
    pub above_median: bool,
}

impl LeaderboardScore {
    pub fn from_rank(rank: u64, total_teams: u64) -> Result<Self, ScoreError> {
        let exceeds = exceeds_percent(rank, total_teams)?;
        Ok(Self {
            rank,
            total_teams,
            exceeds_percent: exceeds,
            above_median: above_median(exceeds),
        })
    }

    pub fn from_placement(p: Placement) -> Result<Self, ScoreError> {
        Self::from_rank(p.rank, p.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub tasks: usize,
    pub mean_exceeds: f64,
    pub above_median_fraction: f64,
}

/// Mean exceeds percentage and the fraction of tasks strictly above the median.
pub fn aggregate(exceeds: &[f64]) -> Result<Aggregate, ScoreError> {
    if exceeds.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    if let Some(&bad) = exceeds
        .iter()
        .find(|v| !v.is_finite() || !(0.0..=100.0).contains(*v))
    {
        return Err(ScoreError::ExceedsRange(bad));
    }
    let n = exceeds.len() as f64;
    Ok(Aggregate {
        tasks: exceeds.len(),
        mean_exceeds: exceeds.iter().sum::<f64>() / n,
        above_median_fraction: exceeds.iter().filter(|&&e| above_median(e)).count() as f64 / n,
    })
}

/// Parses leaderboard text: one score per line, either alone or as the last
/// of two comma- or tab-separated fields (`team,score`). A first line whose
/// score field is not a number is taken as a header. Blank lines are skipped.
pub fn parse_leaderboard(text: &str) -> Result<Vec<f64>, String> {
    let mut scores = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split(',').collect()
        };
        if fields.len() > 2 {
            return Err(format!("line {}: expected 1 or 2 fields, found {}", i + 1, fields.len()));
        }
        let raw = fields[fields.len() - 1].trim();
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => scores.push(v),
            Ok(v) => return Err(format!("line {}: non-finite score {v}", i + 1)),
            Err(_) if scores.is_empty() && i == first_content_line(text) => continue,
            Err(_) => return Err(format!("line {}: {raw:?} is not a number", i + 1)),
        }
    }
    Ok(scores)
}

fn first_content_line(text: &str) -> usize {
    text.lines()
        .position(|l| !l.trim().is_empty())
        .unwrap_or(0)
}

pub fn read_leaderboard(path: &Path) -> Result<Vec<f64>, ScoreError> {
    let err = |message: String| ScoreError::Leaderboard {
        path: path.display().to_string(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let scores = parse_leaderboard(&text).map_err(err)?;
    if scores.is_empty() {
        return Err(ScoreError::EmptyLeaderboard);
    }
    Ok(scores)
}

/// Fixed-width table of named scores.
pub fn render_table(rows: &[(String, LeaderboardScore)]) -> String {
    let width = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once(4))
        .max()
        .unwrap_or(4);
    let mut out = format!(
        "{:<width$}  {:>6}  {:>6}  {:>9}  {:>12}\n",
        "task", "rank", "total", "exceeds%", "above median"
    );
    for (name, s) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}  {:>9.2}  {:>12}",
            name, s.rank, s.total_teams, s.exceeds_percent, s.above_median
        );
    }
    out
}
