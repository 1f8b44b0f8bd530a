//! Benchmark harness: holdout splits, leaderboard scoring, aggregation, cost
//! and code-complexity reports.

pub mod complexity;
pub mod cost;
pub mod grade;
pub mod score;
pub mod split;

pub use complexity::{complexity, ComplexityReport};
pub use cost::{cost, CostRecord};
pub use score::{
    above_median, aggregate, exceeds_percent, rank_against, Aggregate, LeaderboardScore, Placement,
    ScoreError,
};
pub use split::{split_holdout, SplitError, SplitOptions, SplitOutput};
