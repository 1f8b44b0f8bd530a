//! Runs candidate programs inside a fixed workspace layout:
//!
//! ```text
//! <workspace>/input/       task data, read-only
//! <workspace>/working/     scratch, wiped before every run; holds the candidate file
//! <workspace>/submission/  emptied before every run; candidates write submission.csv here
//! ```
//!
//! The child runs in its own process group with the workspace root as its
//! working directory. stdout and stderr share one pipe so the captured log
//! keeps arrival order. On timeout the group gets SIGTERM, then SIGKILL after
//! the grace period.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::{self, Read};
use std::os::unix::fs::PermissionsExt;
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant, SystemTime};

use log::{debug, warn};
use thiserror::Error;
use walkdir::WalkDir;

use crate::config::{RunConfig, FILE_PLACEHOLDER};
use crate::model::{ExecutionResult, ExitStatus};
use crate::operator::SUBMISSION_PATH;
use crate::text::{truncate_middle, truncation_marker};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("workspace error at {path}: {source}")]
    Workspace { path: PathBuf, source: io::Error },
    #[error("invalid interpreter command `{0}`")]
    BadCommand(String),
}

fn ws_err(path: &Path) -> impl FnOnce(io::Error) -> ExecError + '_ {
    move |source| ExecError::Workspace {
        path: path.to_path_buf(),
        source,
    }
}

type Fingerprint = BTreeMap<PathBuf, (u64, Option<SystemTime>, u32)>;

/// The on-disk layout one agent instance executes candidates in.
#[derive(Debug)]
pub struct Workspace {
    root: PathBuf,
    source: PathBuf,
    fingerprint: Fingerprint,
}

impl Workspace {
    pub const INPUT: &'static str = "input";
    pub const WORKING: &'static str = "working";
    pub const SUBMISSION: &'static str = "submission";

    /// Creates the layout under `root` and populates `input/` from `source`.
    /// An existing input copy is reused when it matches the source.
    pub fn prepare(root: &Path, source: &Path) -> Result<Self, ExecError> {
        fs::create_dir_all(root).map_err(ws_err(root))?;
        let root = root.canonicalize().map_err(ws_err(root))?;
        let source = source.canonicalize().map_err(ws_err(source))?;
        let mut ws = Self {
            root,
            source,
            fingerprint: Fingerprint::new(),
        };
        let input = ws.input_dir();
        if input.exists() && same_content(&ws.source, &input).map_err(ws_err(&input))? {
            seal(&input).map_err(ws_err(&input))?;
            ws.fingerprint = fingerprint(&input).map_err(ws_err(&input))?;
        } else {
            ws.restore_input()?;
        }
        ws.reset_scratch()?;
        Ok(ws)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn input_dir(&self) -> PathBuf {
        self.root.join(Self::INPUT)
    }

    pub fn working_dir(&self) -> PathBuf {
        self.root.join(Self::WORKING)
    }

    pub fn submission_dir(&self) -> PathBuf {
        self.root.join(Self::SUBMISSION)
    }

    /// Empties `working/` and `submission/`.
    pub fn reset_scratch(&self) -> Result<(), ExecError> {
        for dir in [self.working_dir(), self.submission_dir()] {
            if dir.exists() {
                unseal(&dir).map_err(ws_err(&dir))?;
                fs::remove_dir_all(&dir).map_err(ws_err(&dir))?;
            }
            fs::create_dir_all(&dir).map_err(ws_err(&dir))?;
        }
        Ok(())
    }

    fn restore_input(&mut self) -> Result<(), ExecError> {
        let input = self.input_dir();
        if input.exists() {
            unseal(&input).map_err(ws_err(&input))?;
            fs::remove_dir_all(&input).map_err(ws_err(&input))?;
        }
        copy_tree(&self.source, &input).map_err(ws_err(&input))?;
        seal(&input).map_err(ws_err(&input))?;
        self.fingerprint = fingerprint(&input).map_err(ws_err(&input))?;
        Ok(())
    }

    /// Re-copies the task data if a candidate changed anything under `input/`.
    /// Returns whether a restore happened.
    pub fn guard_input(&mut self) -> Result<bool, ExecError> {
        let input = self.input_dir();
        let now = fingerprint(&input).map_err(ws_err(&input))?;
        if now == self.fingerprint {
            return Ok(false);
        }
        warn!("candidate modified the read-only input directory; restoring it");
        self.restore_input()?;
        Ok(true)
    }

    /// The submission file, if the last candidate wrote one.
    pub fn collect_submission(&self) -> Option<PathBuf> {
        let path = self.root.join(SUBMISSION_PATH);
        match fs::metadata(&path) {
            Ok(meta) if meta.is_file() => Some(path),
            Ok(_) => {
                warn!("{} is not a regular file; ignoring it", path.display());
                None
            }
            Err(_) => None,
        }
    }

    /// Deletes the workspace, restoring write permission first.
    pub fn remove(self) -> io::Result<()> {
        unseal(&self.root)?;
        fs::remove_dir_all(&self.root)
    }
}

fn copy_tree(from: &Path, to: &Path) -> io::Result<()> {
    fs::create_dir_all(to)?;
    for entry in WalkDir::new(from).min_depth(1).sort_by_file_name() {
        let entry = entry?;
        let rel = entry.path().strip_prefix(from).expect("walk stays under root");
        let target = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&target)?;
        } else {
            fs::copy(entry.path(), &target)?;
        }
    }
    Ok(())
}

fn set_tree_mode(root: &Path, dir_mode: u32, file_mode: u32) -> io::Result<()> {
    // Parents first when opening up, children first when locking down.
    let entries: Vec<_> = WalkDir::new(root)
        .contents_first(dir_mode & 0o200 == 0)
        .into_iter()
        .collect::<Result<_, _>>()?;
    for entry in entries {
        if entry.path_is_symlink() {
            continue;
        }
        let mode = if entry.file_type().is_dir() {
            dir_mode
        } else {
            file_mode
        };
        fs::set_permissions(entry.path(), fs::Permissions::from_mode(mode))?;
    }
    Ok(())
}

fn seal(dir: &Path) -> io::Result<()> {
    set_tree_mode(dir, 0o555, 0o444)
}

fn unseal(dir: &Path) -> io::Result<()> {
    set_tree_mode(dir, 0o755, 0o644)
}

fn fingerprint(dir: &Path) -> io::Result<Fingerprint> {
    let mut out = Fingerprint::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry?;
        let meta = entry.metadata()?;
        let rel = entry.path().strip_prefix(dir).unwrap_or(entry.path());
        let len = if meta.is_dir() { 0 } else { meta.len() };
        out.insert(
            rel.to_path_buf(),
            (len, meta.modified().ok(), meta.permissions().mode()),
        );
    }
    Ok(out)
}

fn same_content(a: &Path, b: &Path) -> io::Result<bool> {
    let listing = |dir: &Path| -> io::Result<Vec<(PathBuf, bool)>> {
        WalkDir::new(dir)
            .min_depth(1)
            .sort_by_file_name()
            .into_iter()
            .map(|e| {
                let e = e?;
                let rel = e.path().strip_prefix(dir).unwrap_or(e.path()).to_path_buf();
                Ok((rel, e.file_type().is_dir()))
            })
            .collect()
    };
    let (la, lb) = (listing(a)?, listing(b)?);
    if la != lb {
        return Ok(false);
    }
    for (rel, is_dir) in la {
        if !is_dir && fs::read(a.join(&rel))? != fs::read(b.join(&rel))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Head+tail capture buffer bounded at roughly twice the cap.
#[derive(Debug)]
struct Capture {
    cap: usize,
    head: Vec<u8>,
    tail: VecDeque<u8>,
    total: usize,
}

impl Capture {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            head: Vec::new(),
            tail: VecDeque::new(),
            total: 0,
        }
    }

    fn push(&mut self, mut bytes: &[u8]) {
        self.total += bytes.len();
        if self.head.len() < self.cap {
            let take = bytes.len().min(self.cap - self.head.len());
            self.head.extend_from_slice(&bytes[..take]);
            bytes = &bytes[take..];
        }
        if bytes.len() >= self.cap {
            self.tail.clear();
            self.tail.extend(&bytes[bytes.len() - self.cap..]);
            return;
        }
        let overflow = (self.tail.len() + bytes.len()).saturating_sub(self.cap);
        self.tail.drain(..overflow);
        self.tail.extend(bytes);
    }

    fn finish(&self) -> String {
        let stored = self.head.len() + self.tail.len();
        let gap = self.total - stored;
        if gap == 0 {
            let mut all = self.head.clone();
            all.extend(self.tail.iter());
            return truncate_middle(&String::from_utf8_lossy(&all), self.cap);
        }
        let marker_len = truncation_marker(self.total).len();
        let budget = self.cap.saturating_sub(marker_len);
        let head_len = budget / 3;
        let tail_len = budget - head_len;
        let tail: Vec<u8> = self.tail.iter().copied().collect();
        let tail_part = &tail[tail.len() - tail_len.min(tail.len())..];
        let omitted = self.total - head_len - tail_part.len();
        let text = format!(
            "{}{}{}",
            String::from_utf8_lossy(&self.head[..head_len]),
            truncation_marker(omitted),
            String::from_utf8_lossy(tail_part)
        );
        // Lossy decoding can widen invalid bytes.
        truncate_middle(&text, self.cap)
    }
}

fn signal_group(pgid: u32, signal: libc::c_int) {
    // SAFETY: kill(2) has no memory-safety preconditions; a negative pid
    // addresses the process group created for the child.
    let rc = unsafe { libc::kill(-(pgid as libc::pid_t), signal) };
    if rc != 0 {
        debug!(
            "kill(-{pgid}, {signal}) failed: {}",
            io::Error::last_os_error()
        );
    }
}

/// Executes candidates in one workspace, one at a time.
#[derive(Debug)]
pub struct Executor {
    workspace: Workspace,
    argv_template: Vec<String>,
    code_file_name: String,
    timeout: Duration,
    grace: Duration,
    capture_cap: usize,
}

impl Executor {
    pub fn new(config: &RunConfig, input_source: &Path) -> Result<Self, ExecError> {
        let argv_template = shlex::split(&config.interpreter_command)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| ExecError::BadCommand(config.interpreter_command.clone()))?;
        let workspace = Workspace::prepare(&config.workspace_dir, input_source)?;
        Ok(Self {
            workspace,
            argv_template,
            code_file_name: config.code_file_name.clone(),
            timeout: config.exec_timeout(),
            grace: config.grace(),
            capture_cap: config.limits.term_out_cap,
        })
    }

    pub fn workspace(&self) -> &Workspace {
        &self.workspace
    }

    pub fn into_workspace(self) -> Workspace {
        self.workspace
    }

    /// Candidate path as seen from the workspace root.
    pub fn code_path(&self) -> String {
        format!("{}/{}", Workspace::WORKING, self.code_file_name)
    }

    /// The command line a candidate is launched with.
    pub fn run_command(&self) -> String {
        let path = self.code_path();
        let argv: Vec<String> = self
            .argv_template
            .iter()
            .map(|a| a.replace(FILE_PLACEHOLDER, &path))
            .collect();
        shlex::try_join(argv.iter().map(String::as_str)).unwrap_or_else(|_| argv.join(" "))
    }

    pub fn collect_submission(&self) -> Option<PathBuf> {
        self.workspace.collect_submission()
    }

    /// Writes `code` to the scratch directory and runs it under the watchdog.
    pub fn execute(&mut self, code: &str) -> Result<ExecutionResult, ExecError> {
        self.workspace.reset_scratch()?;
        let code_path = self.workspace.root().join(self.code_path());
        fs::write(&code_path, code).map_err(ws_err(&code_path))?;

        let result = self.run_child();
        self.workspace.guard_input()?;
        result
    }

    fn run_child(&self) -> Result<ExecutionResult, ExecError> {
        let rel = self.code_path();
        let argv: Vec<String> = self
            .argv_template
            .iter()
            .map(|a| a.replace(FILE_PLACEHOLDER, &rel))
            .collect();
        let root = self.workspace.root();
        let (mut reader, writer) = io::pipe().map_err(ws_err(root))?;
        let writer_err = writer.try_clone().map_err(ws_err(root))?;

        let started = Instant::now();
        let mut command = Command::new(&argv[0]);
        command
            .args(&argv[1..])
            .current_dir(root)
            .env("PYTHONUNBUFFERED", "1")
            .env("PYTHONHASHSEED", "0")
            .stdin(Stdio::null())
            .stdout(writer)
            .stderr(writer_err)
            .process_group(0);
        let spawned = command.spawn();
        // Drop our copies of the write end so EOF arrives when the child exits.
        drop(command);
        let mut child = match spawned {
            Ok(c) => c,
            Err(e) => {
                return Ok(ExecutionResult {
                    term_out: format!("failed to start `{}`: {e}", argv[0]),
                    exit_status: ExitStatus::SpawnError {
                        message: e.to_string(),
                    },
                    exec_time: started.elapsed().as_secs_f64(),
                })
            }
        };
        let pgid = child.id();

        let capture = Arc::new(Mutex::new(Capture::new(self.capture_cap)));
        let (eof_tx, eof_rx) = mpsc::channel();
        {
            let capture = Arc::clone(&capture);
            thread::spawn(move || {
                let mut buf = [0u8; 8192];
                loop {
                    match reader.read(&mut buf) {
                        Ok(0) => break,
                        Ok(n) => capture.lock().expect("capture lock").push(&buf[..n]),
                        Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                        Err(_) => break,
                    }
                }
                let _ = eof_tx.send(());
            });
        }
        let (exit_tx, exit_rx) = mpsc::channel();
        thread::spawn(move || {
            let _ = exit_tx.send(child.wait());
        });

        let mut timed_out = false;
        let status = match exit_rx.recv_timeout(self.timeout) {
            Ok(status) => status,
            Err(_) => {
                timed_out = true;
                signal_group(pgid, libc::SIGTERM);
                match exit_rx.recv_timeout(self.grace) {
                    Ok(status) => status,
                    Err(_) => {
                        signal_group(pgid, libc::SIGKILL);
                        exit_rx.recv().unwrap_or_else(|_| {
                            Err(io::Error::other("wait thread vanished"))
                        })
                    }
                }
            }
        };
        let exec_time = started.elapsed().as_secs_f64();
        // Reap anything the candidate left running in its group.
        signal_group(pgid, libc::SIGKILL);
        if eof_rx
            .recv_timeout(self.grace.max(Duration::from_millis(500)))
            .is_err()
        {
            warn!("output pipe still open after the candidate exited; using partial log");
        }

        let exit_status = if timed_out {
            ExitStatus::Timeout
        } else {
            match status {
                Ok(s) if s.success() => ExitStatus::Success,
                Ok(s) => ExitStatus::NonZeroExit {
                    code: s.code().unwrap_or_else(|| 128 + s.signal().unwrap_or(0)),
                },
                Err(e) => ExitStatus::NonZeroExit {
                    code: e.raw_os_error().unwrap_or(-1),
                },
            }
        };
        let term_out = capture.lock().expect("capture lock").finish();
        Ok(ExecutionResult {
            term_out,
            exit_status,
            exec_time,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(root: &Path, timeout: f64) -> RunConfig {
        RunConfig {
            interpreter_command: "sh {file}".into(),
            code_file_name: "solution.sh".into(),
            exec_timeout_secs: timeout,
            grace_secs: 0.5,
            workspace_dir: root.join("ws"),
            ..RunConfig::default()
        }
    }

    fn setup(timeout: f64) -> (tempfile::TempDir, Executor) {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        fs::create_dir(&data).unwrap();
        fs::write(data.join("train.csv"), "a,b\n1,2\n").unwrap();
        let exec = Executor::new(&config(dir.path(), timeout), &data).unwrap();
        (dir, exec)
    }

    #[test]
    fn success_captures_output() {
        let (_d, mut ex) = setup(5.0);
        let r = ex.execute("echo hello").unwrap();
        assert_eq!(r.exit_status, ExitStatus::Success);
        assert!(r.term_out.contains("hello"));
    }

    #[test]
    fn failure_keeps_stderr_in_order() {
        let (_d, mut ex) = setup(5.0);
        let r = ex
            .execute("echo one\necho two >&2\necho three\nexit 3")
            .unwrap();
        assert_eq!(r.exit_status, ExitStatus::NonZeroExit { code: 3 });
        assert_eq!(r.term_out, "one\ntwo\nthree\n");
    }

    #[test]
    fn timeout_is_enforced() {
        let (_d, mut ex) = setup(0.5);
        let r = ex.execute("sleep 10").unwrap();
        assert_eq!(r.exit_status, ExitStatus::Timeout);
        assert!(r.exec_time >= 0.5 && r.exec_time <= 0.5 + 0.5 + 0.5, "{}", r.exec_time);
    }

    #[test]
    fn missing_interpreter_is_spawn_error() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("data");
        fs::create_dir(&data).unwrap();
        let cfg = RunConfig {
            interpreter_command: "/no/such/interpreter {file}".into(),
            ..config(dir.path(), 1.0)
        };
        let mut ex = Executor::new(&cfg, &data).unwrap();
        let r = ex.execute("x").unwrap();
        assert!(matches!(r.exit_status, ExitStatus::SpawnError { .. }));
    }

    #[test]
    fn output_is_capped_with_head_and_tail() {
        let (_d, mut ex) = setup(10.0);
        ex.capture_cap = 4096;
        let r = ex
            .execute("i=0\nwhile [ $i -lt 3000 ]; do echo line $i; i=$((i+1)); done\necho FINAL")
            .unwrap();
        assert!(r.term_out.len() <= 4096);
        assert!(r.term_out.starts_with("line 0\n"));
        assert!(r.term_out.ends_with("FINAL\n"));
        assert!(r.term_out.contains("bytes truncated"));
    }

    #[test]
    fn submission_is_collected() {
        let (_d, mut ex) = setup(5.0);
        ex.execute("echo id,y > submission/submission.csv").unwrap();
        let path = ex.collect_submission().unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "id,y\n");

        ex.execute("echo nothing").unwrap();
        assert!(ex.collect_submission().is_none());

        ex.execute("mkdir submission/submission.csv").unwrap();
        assert!(ex.collect_submission().is_none());
    }

    #[test]
    fn candidates_read_input_and_tampering_is_undone() {
        let (_d, mut ex) = setup(5.0);
        let r = ex.execute("cat input/train.csv").unwrap();
        assert_eq!(r.term_out, "a,b\n1,2\n");
        // Root ignores permission bits, so a write may succeed; it must not persist.
        ex.execute("chmod u+w input input/train.csv 2>/dev/null; echo junk >> input/train.csv; touch input/new")
            .unwrap();
        let input = ex.workspace().input_dir();
        assert_eq!(fs::read_to_string(input.join("train.csv")).unwrap(), "a,b\n1,2\n");
        assert!(!input.join("new").exists());
    }

    #[test]
    fn scratch_is_wiped_between_runs() {
        let (_d, mut ex) = setup(5.0);
        ex.execute("touch working/leftover").unwrap();
        let r = ex.execute("ls working").unwrap();
        assert_eq!(r.term_out.trim(), "solution.sh");
    }

    #[test]
    fn capture_keeps_exact_text_under_cap() {
        let mut c = Capture::new(16);
        c.push(b"hello ");
        c.push(b"world");
        assert_eq!(c.finish(), "hello world");
    }

    #[test]
    fn capture_bounds_long_streams() {
        let mut c = Capture::new(300);
        for i in 0..10_000 {
            c.push(format!("{i}\n").as_bytes());
        }
        let out = c.finish();
        assert!(out.len() <= 300);
        assert!(out.starts_with("0\n1\n"));
        assert!(out.ends_with("9999\n"));
    }
}
