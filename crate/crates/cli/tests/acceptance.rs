//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use codetree_bench::complexity::complexity;
use codetree_bench::score::{aggregate, exceeds_percent};
use codetree_core::agent::{resume, run};
use codetree_core::config::{Limits, RunConfig, Task};
use codetree_core::context::{preview, summarize};
use codetree_core::executor::Executor;
use codetree_core::journal::Journal;
use codetree_core::model::{
    ExecutionResult, ExitStatus, MetricValue, Node, NodeId, SolutionTree, Stage, TokenUsage,
};
use codetree_core::operator::{build_prompt, PlaybookEntry, PlaybookProvider, TaskBrief};
use codetree_core::policy::{select, PolicyAction};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 7] = [
        ("leaderboard scoring reproduces 16 reference rows and their mean", reference_scores),
        ("returned best equals brute-force argmax over randomized playbooks", best_equals_argmax),
        ("policy follows the four selection rules on random trees", policy_conformance),
        ("replay determinism and crash-consistent resume", determinism_and_resume),
        ("executor keeps input intact and enforces timeouts", executor_isolation),
        ("prompts stay within the configured cap", prompt_bound),
        ("complexity metrics match hand-counted oracles", complexity_oracles),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({detail}; {secs:.2}s)"),
            Err(reason) => {
                failed += 1;
                println!("FAIL {name}: {reason} ({secs:.2}s)");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

// ---------------------------------------------------------------------------
// Leaderboard arithmetic.

/// (competition, total teams, agent rank, published exceeds %).
const REFERENCE_ROWS: [(&str, u64, u64, f64); 16] = [
    ("playground-series-s3e14", 1877, 897, 52.21),
    ("playground-series-s3e16", 1431, 693, 51.57),
    ("playground-series-s3e19", 1174, 742, 36.80),
    ("playground-series-s3e22", 1543, 1142, 25.99),
    ("playground-series-s3e24", 1910, 655, 65.71),
    ("playground-series-s3e25", 1633, 948, 41.95),
    ("tabular-playground-series-aug-2022", 1889, 392, 79.25),
    ("tabular-playground-series-feb-2021", 1434, 559, 61.02),
    ("tabular-playground-series-feb-2022", 1257, 708, 43.68),
    ("tabular-playground-series-jan-2022", 1592, 886, 44.35),
    ("tabular-playground-series-jul-2021", 1294, 1126, 12.98),
    ("tmdb-box-office-prediction", 1395, 692, 50.39),
    ("bike-sharing-demand", 3243, 262, 91.92),
    ("cat-in-the-dat", 1341, 714, 46.76),
    ("house-prices-advanced-regression-techniques", 4978, 1357, 72.74),
    ("new-york-city-taxi-fare-prediction", 1485, 819, 44.85),
];
const REFERENCE_MEAN: f64 = 51.38;

fn reference_scores() -> Outcome {
    let start = Instant::now();
    let mut values = Vec::new();
    for (name, total, rank, published) in REFERENCE_ROWS {
        let e = exceeds_percent(rank, total).map_err(|e| format!("{name}: {e}"))?;
        ensure!((e - published).abs() <= 0.01, "{name}: {e:.4} vs {published}");
        values.push(e);
    }
    let agg = aggregate(&values).map_err(|e| e.to_string())?;
    ensure!(
        (agg.mean_exceeds - REFERENCE_MEAN).abs() <= 0.02,
        "mean {:.4} vs {REFERENCE_MEAN}",
        agg.mean_exceeds
    );
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "mean {:.4}, above-median share {:.2}",
        agg.mean_exceeds, agg.above_median_fraction
    ))
}

// ---------------------------------------------------------------------------
// Search loop fixtures.

fn make_task(root: &Path) -> Task {
    let dir = root.join("task");
    fs::create_dir_all(dir.join("input")).unwrap();
    fs::write(dir.join("task.md"), "Predict y from x.\n").unwrap();
    fs::write(dir.join("input/train.csv"), "x,y\n1,2\n2,4\n3,6\n").unwrap();
    Task::load(&dir).unwrap()
}

fn sh_config(workspace: PathBuf, steps: u32, drafts: u32) -> RunConfig {
    RunConfig {
        max_steps: steps,
        num_drafts: drafts,
        interpreter_command: "sh {file}".into(),
        code_file_name: "solution.sh".into(),
        exec_timeout_secs: 10.0,
        grace_secs: 0.5,
        workspace_dir: workspace,
        ..RunConfig::default()
    }
}

#[derive(Debug, Clone, Copy)]
enum Script {
    Metric(f64),
    Crash,
    Silent,
    NotANumber,
}

fn reply(script: Script) -> PlaybookEntry {
    let body = match script {
        Script::Metric(m) => format!(
            "mkdir -p submission\necho id,y > submission/submission.csv\necho \"VALIDATION_METRIC: {m}\""
        ),
        Script::Crash => "echo 'ValueError: shapes do not match' >&2\nexit 1".to_string(),
        Script::Silent => "echo training done".to_string(),
        Script::NotANumber => "echo 'VALIDATION_METRIC: nan'".to_string(),
    };
    PlaybookEntry::reply(format!("Plan for this step.\n\n```sh\n{body}\n```\n"))
}

/// Index of the best finite metric, earliest on ties.
fn argmax(metrics: &[Option<f64>], lower_is_better: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in metrics.iter().enumerate() {
        if let Some(v) = *m {
            let better = match best {
                None => true,
                Some((_, b)) => {
                    if lower_is_better {
                        v < b
                    } else {
                        v > b
                    }
                }
            };
            if better {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn one_random_run(seed: u64, task: &Task, scratch: &Path) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = rng.random_range(1..=8u32);
    let drafts = rng.random_range(1..=steps.min(3));
    let lower = rng.random_bool(0.5);
    let scripts: Vec<Script> = (0..steps)
        .map(|_| match rng.random_range(0..10) {
            0..=2 => Script::Crash,
            3 => Script::Silent,
            4 => Script::NotANumber,
            _ => Script::Metric(rng.random_range(-8..=12) as f64 / 4.0),
        })
        .collect();
    let mut config = sh_config(scratch.join(format!("ws-{seed}")), steps, drafts);
    config.debug_depth_limit = rng.random_range(1..=3);
    config.lower_is_better = lower;
    let journal_path = scratch.join(format!("journal-{seed}.json"));
    let mut provider = PlaybookProvider::new(scripts.iter().map(|&s| reply(s)).collect()).unwrap();

    let outcome =
        run(task, &config, &mut provider, &journal_path).map_err(|e| format!("seed {seed}: {e}"))?;
    let journal = Journal::read(&journal_path).map_err(|e| format!("seed {seed}: {e}"))?;
    ensure!(journal.nodes.len() == steps as usize, "seed {seed}: {} nodes", journal.nodes.len());

    let recorded: Vec<Option<f64>> = journal
        .nodes
        .iter()
        .map(|n| (!n.is_buggy).then(|| n.metric.map(|m| m.value())).flatten())
        .collect();
    let scripted: Vec<Option<f64>> = scripts
        .iter()
        .map(|s| match s {
            Script::Metric(m) => Some(*m),
            _ => None,
        })
        .collect();
    ensure!(recorded == scripted, "seed {seed}: recorded {recorded:?} vs scripted {scripted:?}");

    let expected = argmax(&recorded, lower).map(|i| journal.nodes[i].id.clone());
    let got = outcome.best.as_ref().map(|n| n.id.clone());
    ensure!(got == expected, "seed {seed}: best {got:?}, brute force {expected:?}");

    let draft_count = journal.nodes.iter().filter(|n| n.stage == Stage::Draft).count();
    ensure!(
        draft_count >= drafts.min(steps) as usize,
        "seed {seed}: {draft_count} drafts"
    );
    let _ = fs::remove_dir_all(&config.workspace_dir);
    Ok(())
}

fn best_equals_argmax() -> Outcome {
    const RUNS: usize = 512;
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let task = make_task(dir.path());
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(16);
    let errors: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut errs = Vec::new();
                    loop {
                        let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                        if i >= RUNS {
                            break;
                        }
                        if let Err(e) = one_random_run(i as u64, &task, dir.path()) {
                            errs.push(e);
                        }
                    }
                    errs
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    ensure!(errors.is_empty(), "{} mismatches, first: {}", errors.len(), errors[0]);
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{RUNS} playbooks, {workers} workers"))
}

// ---------------------------------------------------------------------------
// Policy.

fn random_node(tree: &SolutionTree, step: u64, parent: Option<NodeId>, metric: Option<f64>, lower: bool) -> Node {
    let stage = match parent.as_ref().and_then(|p| tree.get(p)) {
        None => Stage::Draft,
        Some(p) if p.is_buggy => Stage::Debug,
        Some(_) => Stage::Improve,
    };
    Node {
        id: NodeId::for_step(step),
        debug_depth: tree.child_debug_depth(parent.as_ref()),
        parent_id: parent,
        stage,
        plan: String::new(),
        code: String::new(),
        execution: None,
        metric: metric.map(|m| MetricValue::new(m, lower).unwrap()),
        is_buggy: metric.is_none(),
        summary: String::new(),
        created_step: step,
        usage: None,
    }
}

/// Expected action computed from the rules over raw node fields.
fn policy_oracle(nodes: &[Node], num_drafts: u32, limit: u32, lower: bool) -> PolicyAction {
    let drafts = nodes.iter().filter(|n| n.parent_id.is_none()).count();
    if drafts < num_drafts as usize {
        return PolicyAction::Draft;
    }
    let find = |id: &NodeId| nodes.iter().find(|n| &n.id == id);
    let chain_depth = |n: &Node| {
        let mut depth = 0;
        let mut cur = n.parent_id.as_ref().and_then(find);
        while let Some(p) = cur {
            if !p.is_buggy {
                break;
            }
            depth += 1;
            cur = p.parent_id.as_ref().and_then(find);
        }
        depth
    };
    let is_leaf = |n: &Node| !nodes.iter().any(|c| c.parent_id.as_ref() == Some(&n.id));
    if let Some(target) = nodes
        .iter()
        .filter(|n| n.is_buggy && is_leaf(n) && chain_depth(n) < limit)
        .max_by_key(|n| n.created_step)
    {
        return PolicyAction::Debug(target.id.clone());
    }
    let metrics: Vec<Option<f64>> = nodes
        .iter()
        .map(|n| n.metric.map(|m| m.value()))
        .collect();
    match argmax(&metrics, lower) {
        Some(i) => PolicyAction::Improve(nodes[i].id.clone()),
        None => PolicyAction::Draft,
    }
}

fn check_policy(tree: &SolutionTree, cfg: &RunConfig) -> Result<(), String> {
    let got = select(tree, cfg);
    ensure!(got == select(tree, cfg), "select is not deterministic");
    let want = policy_oracle(tree.nodes(), cfg.num_drafts, cfg.debug_depth_limit, cfg.lower_is_better);
    ensure!(got == want, "select {got:?}, rules {want:?} on {} nodes", tree.len());
    match &got {
        PolicyAction::Debug(id) => {
            let n = tree.get(id).unwrap();
            ensure!(n.is_buggy && tree.is_leaf(id), "debug target {id} is not a buggy leaf");
            ensure!(n.debug_depth < cfg.debug_depth_limit, "debug target {id} too deep");
        }
        PolicyAction::Improve(id) => {
            ensure!(!tree.get(id).unwrap().is_buggy, "improve target {id} is buggy");
        }
        PolicyAction::Draft => {}
    }
    Ok(())
}

fn policy_conformance() -> Outcome {
    const TREES: u64 = 1200;
    let mut checks = 0usize;
    let mut seen = [0usize; 3];
    for seed in 0..TREES {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let cfg = RunConfig {
            num_drafts: rng.random_range(1..=6),
            debug_depth_limit: rng.random_range(1..=4),
            lower_is_better: rng.random_bool(0.5),
            ..RunConfig::default()
        };
        let follow_policy = seed % 2 == 0;
        let bug_rate = rng.random_range(0.1..0.9);
        let size = rng.random_range(0..40u64);
        let mut tree = SolutionTree::new();
        for step in 1..=size {
            check_policy(&tree, &cfg).map_err(|e| format!("tree {seed}: {e}"))?;
            checks += 1;
            let parent = if follow_policy {
                select(&tree, &cfg).target().cloned()
            } else if tree.is_empty() || rng.random_bool(0.25) {
                None
            } else {
                let i = rng.random_range(0..tree.len());
                Some(tree.nodes()[i].id.clone())
            };
            let metric = (!rng.random_bool(bug_rate)).then(|| rng.random_range(0..10) as f64 / 10.0);
            let node = random_node(&tree, step, parent, metric, cfg.lower_is_better);
            tree.append(node).map_err(|e| format!("tree {seed}: {e}"))?;
        }
        check_policy(&tree, &cfg).map_err(|e| format!("tree {seed}: {e}"))?;
        checks += 1;
        seen[match select(&tree, &cfg) {
            PolicyAction::Draft => 0,
            PolicyAction::Debug(_) => 1,
            PolicyAction::Improve(_) => 2,
        }] += 1;
    }
    ensure!(seen.iter().all(|&c| c > 0), "not every rule exercised: {seen:?}");
    Ok(format!(
        "{TREES} trees, {checks} selections, final draft/debug/improve {seen:?}"
    ))
}

// ---------------------------------------------------------------------------
// Replay and resume.

fn six_step_playbook() -> Vec<PlaybookEntry> {
    [
        Script::Metric(0.40),
        Script::Crash,
        Script::Metric(0.50),
        Script::Metric(0.55),
        Script::Silent,
        Script::Metric(0.61),
    ]
    .into_iter()
    .map(reply)
    .collect()
}

fn normalized(path: &Path) -> Result<String, String> {
    Ok(Journal::read(path).map_err(|e| e.to_string())?.normalized().to_json())
}

fn determinism_and_resume() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let task = make_task(dir.path());
    let config = sh_config(dir.path().join("ws"), 6, 2);
    let reference_path = dir.path().join("reference.json");
    let mut p = PlaybookProvider::new(six_step_playbook()).unwrap();
    run(&task, &config, &mut p, &reference_path).map_err(|e| e.to_string())?;
    let reference = normalized(&reference_path)?;

    let replay_path = dir.path().join("replay.json");
    let mut p = PlaybookProvider::new(six_step_playbook()).unwrap();
    run(&task, &config, &mut p, &replay_path).map_err(|e| e.to_string())?;
    ensure!(normalized(&replay_path)? == reference, "replay journal differs");

    for k in 1..6 {
        let path = dir.path().join(format!("interrupted-{k}.json"));
        let mut head = PlaybookProvider::new(six_step_playbook()[..k].to_vec()).unwrap();
        ensure!(
            run(&task, &config, &mut head, &path).is_err(),
            "k={k}: truncated playbook did not interrupt the run"
        );
        let partial = Journal::read(&path).map_err(|e| e.to_string())?;
        ensure!(partial.nodes.len() == k, "k={k}: {} nodes persisted", partial.nodes.len());
        let mut tail = PlaybookProvider::new(six_step_playbook()).unwrap();
        tail.skip(partial.provider_calls());
        resume(&path, &task, &config, &mut tail).map_err(|e| format!("k={k}: {e}"))?;
        ensure!(normalized(&path)? == reference, "k={k}: resumed journal differs");
    }
    Ok("2 replays and 5 interrupted runs identical".into())
}

// ---------------------------------------------------------------------------
// Executor isolation.

fn dir_hash(dir: &Path) -> String {
    let mut entries: Vec<PathBuf> = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p.clone());
            }
            entries.push(p);
        }
    }
    entries.sort();
    let mut h = Sha256::new();
    for p in entries {
        h.update(p.strip_prefix(dir).unwrap().to_string_lossy().as_bytes());
        h.update([0]);
        if p.is_file() {
            h.update(fs::read(&p).unwrap());
        }
        h.update([1]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn executor_isolation() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("source");
    fs::create_dir_all(source.join("sub")).unwrap();
    fs::write(source.join("train.csv"), "x,y\n1,2\n").unwrap();
    fs::write(source.join("sub/extra.txt"), "extra\n").unwrap();
    let exec_timeout = 1.0;
    let config = RunConfig {
        interpreter_command: "sh {file}".into(),
        code_file_name: "solution.sh".into(),
        exec_timeout_secs: exec_timeout,
        workspace_dir: dir.path().join("ws"),
        ..RunConfig::default()
    };
    let mut ex = Executor::new(&config, &source).map_err(|e| e.to_string())?;
    let input = ex.workspace().input_dir();
    let source_hash = dir_hash(&source);
    let input_hash = dir_hash(&input);
    ensure!(source_hash == input_hash, "workspace input differs from source");

    let hostile = [
        "echo overwritten > input/train.csv",
        "rm -rf input/sub",
        "chmod -R u+w input 2>/dev/null; echo more >> input/train.csv; mkdir input/new",
        "mv input/train.csv working/ 2>/dev/null; true",
        "cat input/train.csv > working/copy.csv; echo VALIDATION_METRIC: 1",
    ];
    let (mut timeouts, mut nonzero) = (0, 0);
    for i in 0..100 {
        let script = match i {
            40 => "trap '' TERM\nsleep 30 &\nwait\nsleep 30".to_string(),
            70 => "echo 'boom' >&2\nexit 7".to_string(),
            _ => hostile[i % hostile.len()].to_string(),
        };
        let start = Instant::now();
        let res = ex.execute(&script).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed().as_secs_f64();
        match res.exit_status {
            ExitStatus::Timeout => {
                timeouts += 1;
                ensure!(elapsed <= exec_timeout + 2.0, "timeout took {elapsed:.2}s");
            }
            ExitStatus::NonZeroExit { .. } => nonzero += 1,
            _ => {}
        }
        let now = dir_hash(&input);
        ensure!(now == input_hash, "input changed after execution {i}");
    }
    ensure!(timeouts == 1, "{timeouts} timeouts");
    ensure!(nonzero >= 1, "no non-zero exit");
    ensure!(dir_hash(&source) == source_hash, "task source directory changed");
    Ok(format!("100 executions, {timeouts} timeout, {nonzero} non-zero exits"))
}

// ---------------------------------------------------------------------------
// Prompt size.

fn big_tree(rng: &mut ChaCha8Rng, huge: &str) -> SolutionTree {
    let mut tree = SolutionTree::new();
    for step in 1..=300u64 {
        let parent = (step > 5 && rng.random_bool(0.8))
            .then(|| NodeId::for_step(rng.random_range(1..step)));
        let metric = rng.random_bool(0.5).then(|| rng.random_range(0.0..1.0));
        let mut node = random_node(&tree, step, parent, metric, false);
        node.plan = "tune the gradient boosting depth and learning rate ".repeat(rng.random_range(1..40));
        node.code = "import numpy as np\n".repeat(rng.random_range(1..3000));
        let term_out = if step % 50 == 0 {
            huge.to_string()
        } else {
            "Traceback (most recent call last):\nValueError: bad shape\n".repeat(rng.random_range(1..200))
        };
        node.execution = Some(ExecutionResult {
            exit_status: if node.is_buggy {
                ExitStatus::NonZeroExit { code: 1 }
            } else {
                ExitStatus::Success
            },
            term_out,
            exec_time: 1.0,
        });
        node.summary = "ValueError: bad shape".into();
        node.usage = Some(TokenUsage::default());
        tree.append(node).unwrap();
    }
    tree
}

fn prompt_bound() -> Outcome {
    let huge: String = "x".repeat(1 << 20);
    let description = format!("{}\n", "Predict the target column. ".repeat(40_000));
    let data = tempfile::tempdir().unwrap();
    for i in 0..300 {
        fs::write(data.path().join(format!("part-{i:03}.csv")), "a,b,c\n1,2,3\n").unwrap();
    }
    let caps = [4096usize, 8192, 16 * 1024, 32 * 1024, 128 * 1024];
    let mut bundles = 0;
    let mut largest_ratio: f64 = 0.0;
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = big_tree(&mut rng, &huge);
        let debug_target = tree
            .nodes()
            .iter()
            .rev()
            .find(|n| n.is_buggy && n.execution.as_ref().unwrap().term_out.len() == huge.len());
        let improve_target = tree.nodes().iter().find(|n| !n.is_buggy);
        for &cap in &caps {
            let limits = Limits {
                prompt_cap: cap,
                ..Limits::default()
            };
            let prev = preview(data.path(), &limits).map_err(|e| e.to_string())?;
            let memory = summarize(&tree, limits.memory_cap);
            let brief = TaskBrief {
                description: &description,
                run_command: "python3 working/solution.py",
                lower_is_better: false,
            };
            let mut actions = vec![(PolicyAction::Draft, None)];
            if let Some(n) = debug_target {
                actions.push((PolicyAction::Debug(n.id.clone()), Some(n)));
            }
            if let Some(n) = improve_target {
                actions.push((PolicyAction::Improve(n.id.clone()), Some(n)));
            }
            let chosen = select(&tree, &RunConfig { num_drafts: 1, ..RunConfig::default() });
            let chosen_parent = chosen.target().and_then(|id| tree.get(id));
            actions.push((chosen.clone(), chosen_parent));
            for (action, parent) in actions {
                let b = build_prompt(&action, parent, &memory, &prev, &brief, cap)
                    .map_err(|e| format!("{action:?} at cap {cap}: {e}"))?;
                ensure!(b.size() <= cap, "{action:?}: {} bytes > cap {cap}", b.size());
                largest_ratio = largest_ratio.max(b.size() as f64 / cap as f64);
                bundles += 1;
            }
        }
    }
    ensure!(bundles >= 40, "only {bundles} bundles built");
    Ok(format!("{bundles} bundles, max fill {:.3} of cap", largest_ratio))
}

// ---------------------------------------------------------------------------
// Complexity metrics.

struct Oracle {
    code: &'static str,
    loc: usize,
    lloc: usize,
    n1_total: usize,
    volume: f64,
    mi: f64,
}

/// Counts done by hand: operators are keywords and punctuation (a bracket
/// pair counts once), operands are names and literals.
const ORACLES: [Oracle; 5] = [
    // ops = +        operands a b c          N=5 n=5
    Oracle { code: "a = b + c", loc: 1, lloc: 1, n1_total: 2, volume: 11.6096, mi: 92.4096 },
    // ops = =        operands x 1 y 2        N=6 n=5
    Oracle { code: "x = 1\n\n# note\ny = 2", loc: 4, lloc: 2, n1_total: 2, volume: 13.9316, mi: 85.2885 },
    // ops def ( : return *   operands f x x 2   N=9 n=8
    Oracle { code: "def f(x):\n    return x * 2\n", loc: 2, lloc: 2, n1_total: 5, volume: 27.0, mi: 83.2764 },
    // ops if and : = else : =   operands a b c 1 c 2   N=13 n=10, CC=3
    Oracle {
        code: "if a and b:\n    c = 1\nelse:\n    c = 2\n",
        loc: 4,
        lloc: 4,
        n1_total: 7,
        volume: 43.1851,
        mi: 75.0125,
    },
    // ops for in ( : (   operands i range 10 print i   N=10 n=8, CC=2
    Oracle { code: "for i in range(10):\n    print(i)\n", loc: 2, lloc: 2, n1_total: 5, volume: 30.0, mi: 82.8215 },
];

fn complexity_oracles() -> Outcome {
    for o in &ORACLES {
        let r = complexity(o.code);
        ensure!(
            (r.loc, r.lloc, r.total_operators) == (o.loc, o.lloc, o.n1_total),
            "{:?}: LOC/LLOC/N1 {:?}",
            o.code,
            (r.loc, r.lloc, r.total_operators)
        );
        ensure!((r.volume - o.volume).abs() <= 0.01, "{:?}: volume {}", o.code, r.volume);
        ensure!((r.maintainability - o.mi).abs() <= 0.01, "{:?}: MI {}", o.code, r.maintainability);
    }

    const POOL: [&str; 10] = [
        "",
        "# comment",
        "x = 1",
        "def f(a, b):",
        "    return a + b",
        "for i in range(3):",
        "    total += i",
        "s = 'text # not a comment'",
        "   ",
        "if x and y: z = 2",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let snippet = |rng: &mut ChaCha8Rng| -> String {
        (0..rng.random_range(0..15))
            .map(|_| POOL[rng.random_range(0..POOL.len())])
            .collect::<Vec<_>>()
            .join("\n")
    };
    let pairs = 2000;
    for _ in 0..pairs {
        let a = snippet(&mut rng);
        let b = snippet(&mut rng);
        let joined = if a.is_empty() { b.clone() } else { format!("{a}\n{b}") };
        let (ra, rb, rj) = (complexity(&a), complexity(&b), complexity(&joined));
        ensure!(
            rj.loc >= ra.loc && rj.lloc >= ra.lloc,
            "concatenation shrank counts for {a:?} + {b:?}"
        );
        ensure!(rj.loc >= rb.loc && rj.lloc >= rb.lloc, "suffix exceeds whole for {b:?}");
    }
    Ok(format!("5 snippets, {pairs} random pairs"))
}
