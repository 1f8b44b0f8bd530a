//! Exercises the file formats shared with external task generators: a labeled
//! table, a grader command printing a metric line, and a leaderboard file.

use std::fs;

use codetree_bench::grade::grade;
use codetree_bench::score::{aggregate, rank_against, read_leaderboard, LeaderboardScore};
use codetree_bench::split::{split_holdout, SplitOptions, HOLDOUT_LABELS};

/// Accuracy of `$1` (submission) against `$2` (labels), joined on the id column.
const GRADER: &str = r#"awk -F, 'NR==FNR { if (FNR > 1) truth[$1] = $2; next }
FNR > 1 { n++; if (truth[$1] == $2) hit++ }
END { if (n == 0) exit 2; printf "VALIDATION_METRIC: %.6f\n", hit / n }' "$2" "$1"
"#;

#[test]
fn split_grade_and_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    fs::create_dir_all(&data).unwrap();
    let mut table = String::from("id,feature,label\n");
    for i in 0..200 {
        table.push_str(&format!("{i},{},{}\n", i * 7 % 13, i % 2));
    }
    fs::write(data.join("train.csv"), table).unwrap();

    let out = dir.path().join("split");
    let mut opts = SplitOptions::new(0.25, 3);
    opts.id = Some("id".into());
    let res = split_holdout(&data, &out, &opts).unwrap();
    assert_eq!(res.holdout_rows, 50);
    let labels = out.join(HOLDOUT_LABELS);

    // Perfect submission: the labels themselves in reverse row order.
    let text = fs::read_to_string(&labels).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    let header = lines.remove(0);
    lines.reverse();
    let perfect = dir.path().join("perfect.csv");
    fs::write(&perfect, format!("{header}\n{}\n", lines.join("\n"))).unwrap();

    // Constant guess: always 0.
    let constant = dir.path().join("constant.csv");
    let rows: Vec<String> = lines
        .iter()
        .map(|l| format!("{},0", l.split(',').next().unwrap()))
        .collect();
    fs::write(&constant, format!("{header}\n{}\n", rows.join("\n"))).unwrap();

    let script = dir.path().join("grade.sh");
    fs::write(&script, GRADER).unwrap();
    let command = format!("sh {} {{submission}} {}", script.display(), labels.display());
    let perfect_score = grade(&command, &perfect).unwrap();
    let constant_score = grade(&command, &constant).unwrap();
    assert_eq!(perfect_score, 1.0);
    assert!(constant_score < 1.0 && constant_score > 0.0);

    let board: String = (0..200).map(|i| format!("team{i},{}\n", i as f64 / 200.0)).collect();
    let board_path = dir.path().join("leaderboard.csv");
    fs::write(&board_path, format!("team,score\n{board}")).unwrap();
    let scores = read_leaderboard(&board_path).unwrap();
    assert_eq!(scores.len(), 200);

    let best = LeaderboardScore::from_placement(rank_against(&scores, perfect_score, false).unwrap()).unwrap();
    let weak = LeaderboardScore::from_placement(rank_against(&scores, constant_score, false).unwrap()).unwrap();
    assert_eq!(best.rank, 1);
    assert!(best.above_median);
    assert!(weak.exceeds_percent < best.exceeds_percent);
    let agg = aggregate(&[best.exceeds_percent, weak.exceeds_percent]).unwrap();
    assert!(agg.mean_exceeds > weak.exceeds_percent);
}
