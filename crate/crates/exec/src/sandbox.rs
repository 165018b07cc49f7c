use std::fs;
use std::io::Read;
use std::os::unix::fs::PermissionsExt;
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, ExitStatus, Stdio};
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::outcome::{ExecStatus, ExecutionOutcome, ValidatedProgram, Validation};
use crate::question::{Comparison, QuestionSpec};
use crate::render::render_buggy_output;

const HARNESS_SOURCE: &str = include_str!("../assets/harness.py");
/// Exit code the harness uses when the program violates the sandbox policy.
const VIOLATION_EXIT: i32 = 86;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SandboxError {
    #[error("sandbox unavailable: {0}")]
    Unavailable(String),
    #[error("harness error: {0}")]
    Harness(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("program is not correct (status: {})", .0.describe())]
    NotCorrect(ExecStatus),
    #[error("repeats must be at least 1")]
    ZeroRepeats,
    #[error(transparent)]
    Sandbox(#[from] SandboxError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SandboxConfig {
    /// Interpreter for student programs.
    pub interpreter: PathBuf,
    /// Concurrent executions allowed. Zero means one per host core.
    pub max_workers: usize,
    /// Bytes kept from each of stdout and stderr; the rest is drained and counted.
    pub capture_limit: usize,
    pub file_size_limit: u64,
    /// Process limit applied after dropping privileges.
    pub process_limit: u64,
    /// Drop to `unprivileged_uid` before exec. `None` drops only when running as root.
    pub drop_privileges: Option<bool>,
    pub unprivileged_uid: u32,
    pub unprivileged_gid: u32,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            interpreter: PathBuf::from("python3"),
            max_workers: 0,
            capture_limit: 64 * 1024,
            file_size_limit: 16 * 1024 * 1024,
            process_limit: 256,
            drop_privileges: None,
            unprivileged_uid: 65534,
            unprivileged_gid: 65534,
        }
    }
}

#[derive(Debug)]
struct Permits {
    available: Mutex<usize>,
    freed: Condvar,
}

struct PermitGuard<'a>(&'a Permits);

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut available = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *available == 0 {
            available = self.freed.wait(available).unwrap_or_else(|e| e.into_inner());
        }
        *available -= 1;
        PermitGuard(self)
    }
}

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        let mut available = self.0.available.lock().unwrap_or_else(|e| e.into_inner());
        *available += 1;
        self.0.freed.notify_one();
    }
}

/// Executes programs in isolated child processes. Cheap to clone; clones share
/// the worker cap.
#[derive(Debug, Clone)]
pub struct Sandbox {
    config: Arc<SandboxConfig>,
    permits: Arc<Permits>,
}

impl Default for Sandbox {
    fn default() -> Self {
        Self::new(SandboxConfig::default())
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Record {
    Start {
        index: usize,
    },
    Case {
        index: usize,
        status: CaseStatus,
        #[serde(default)]
        trace: String,
        #[serde(default)]
        observed: String,
        #[serde(default)]
        expected: String,
    },
    LoadError {
        trace: String,
    },
    HarnessError {
        message: String,
    },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum CaseStatus {
    Pass,
    Fail,
    Error,
}

#[derive(Serialize)]
struct WireCase<'a> {
    call: &'a str,
    expected: &'a str,
    comparison: &'static str,
    rel_tol: f64,
    abs_tol: f64,
}

struct Captured {
    text: String,
    total: u64,
}

impl Sandbox {
    pub fn new(config: SandboxConfig) -> Self {
        let workers = if config.max_workers == 0 {
            thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            config.max_workers
        };
        Self {
            config: Arc::new(config),
            permits: Arc::new(Permits {
                available: Mutex::new(workers),
                freed: Condvar::new(),
            }),
        }
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    /// Checks that the interpreter can be started at all.
    pub fn probe(&self) -> Result<(), SandboxError> {
        let status = Command::new(&self.config.interpreter)
            .arg("--version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .map_err(|e| SandboxError::Unavailable(format!("{}: {e}", self.config.interpreter.display())))?;
        if status.success() {
            Ok(())
        } else {
            Err(SandboxError::Unavailable(format!(
                "{} --version exited with {status}",
                self.config.interpreter.display()
            )))
        }
    }

    /// Runs `code` against every test of `question`. Failures of the student
    /// program are reported in the outcome; only host-side problems are errors.
    pub fn run_against_harness(&self, code: &str, question: &QuestionSpec) -> Result<ExecutionOutcome, SandboxError> {
        question
            .validate()
            .map_err(|e| SandboxError::Harness(e.to_string()))?;
        let _permit = self.permits.acquire();
        let workdir = tempfile::Builder::new()
            .prefix("metahint-run-")
            .tempdir()
            .map_err(|e| SandboxError::Unavailable(format!("cannot create work directory: {e}")))?;
        let drop_privileges = self
            .config
            .drop_privileges
            .unwrap_or_else(|| unsafe { libc::geteuid() } == 0);
        self.prepare_workdir(workdir.path(), code, question, drop_privileges)?;

        let mut child = self.spawn(workdir.path(), question, drop_privileges)?;
        let started = Instant::now();
        let stdout = capture(child.stdout.take(), self.config.capture_limit);
        let stderr = capture(child.stderr.take(), self.config.capture_limit);

        let limit = Duration::from_secs_f64(question.time_limit);
        let (status, timed_out) = wait_with_deadline(&mut child, started, limit)?;
        let wall_time = started.elapsed().as_secs_f64();
        kill_group(child.id());

        let grace = Duration::from_millis(500);
        let stdout = stdout.recv_timeout(grace).unwrap_or(Captured {
            text: String::new(),
            total: 0,
        });
        let stderr = stderr.recv_timeout(grace).unwrap_or(Captured {
            text: String::new(),
            total: 0,
        });

        let records = read_records(&workdir.path().join("result.jsonl"));
        let outcome = build_outcome(
            question,
            records,
            RunFacts {
                status,
                timed_out,
                wall_time,
                stdout,
                stderr,
            },
        )?;
        tracing::debug!(
            question = %question.question_id,
            status = ?outcome.status,
            wall_time,
            "harness run finished"
        );
        Ok(outcome)
    }

    /// Prompt-ready rendering of the program's first failure.
    pub fn extract_buggy_output(&self, code: &str, question: &QuestionSpec) -> Result<String, SandboxError> {
        Ok(render_buggy_output(&self.run_against_harness(code, question)?))
    }

    /// A candidate is valid exactly when it passes every test.
    pub fn validate_candidate(&self, code: &str, question: &QuestionSpec) -> Result<Validation, SandboxError> {
        let outcome = self.run_against_harness(code, question)?;
        let valid = outcome.passed();
        Ok(Validation {
            valid,
            program: valid.then(|| ValidatedProgram::new(code.to_string())),
            outcome,
        })
    }

    /// Median wall time of `repeats` full-harness runs of a correct program.
    pub fn measure_runtime(&self, code: &str, question: &QuestionSpec, repeats: u32) -> Result<f64, MeasureError> {
        if repeats == 0 {
            return Err(MeasureError::ZeroRepeats);
        }
        let validation = self.validate_candidate(code, question)?;
        if !validation.valid {
            return Err(MeasureError::NotCorrect(validation.outcome.status));
        }
        let mut times = Vec::with_capacity(repeats as usize);
        for _ in 0..repeats {
            let outcome = self.run_against_harness(code, question)?;
            if !outcome.passed() {
                return Err(MeasureError::NotCorrect(outcome.status));
            }
            times.push(outcome.wall_time);
        }
        times.sort_by(f64::total_cmp);
        let mid = times.len() / 2;
        Ok(if times.len() % 2 == 1 {
            times[mid]
        } else {
            (times[mid - 1] + times[mid]) / 2.0
        })
    }

    fn prepare_workdir(
        &self,
        dir: &Path,
        code: &str,
        question: &QuestionSpec,
        drop_privileges: bool,
    ) -> Result<(), SandboxError> {
        let unavailable = |what: &str, e: std::io::Error| SandboxError::Unavailable(format!("{what}: {e}"));
        let cases: Vec<WireCase<'_>> = question
            .test_cases
            .iter()
            .map(|case| {
                let (comparison, rel_tol, abs_tol) = match case.comparison {
                    Comparison::Exact => ("exact", 0.0, 0.0),
                    Comparison::Approx { rel_tol, abs_tol } => ("approx", rel_tol, abs_tol),
                };
                WireCase {
                    call: &case.call,
                    expected: &case.expected,
                    comparison,
                    rel_tol,
                    abs_tol,
                }
            })
            .collect();
        let cases = serde_json::to_vec(&cases).map_err(|e| SandboxError::Harness(e.to_string()))?;
        fs::write(dir.join("student.py"), code).map_err(|e| unavailable("write program", e))?;
        fs::write(dir.join("cases.json"), cases).map_err(|e| unavailable("write cases", e))?;
        fs::write(dir.join("harness.py"), HARNESS_SOURCE).map_err(|e| unavailable("write harness", e))?;
        if drop_privileges {
            fs::set_permissions(dir, fs::Permissions::from_mode(0o755)).map_err(|e| unavailable("chmod", e))?;
            chown(dir, self.config.unprivileged_uid, self.config.unprivileged_gid)?;
        }
        Ok(())
    }

    fn spawn(&self, dir: &Path, question: &QuestionSpec, drop_privileges: bool) -> Result<Child, SandboxError> {
        let mut cmd = Command::new(&self.config.interpreter);
        cmd.args(["-I", "-B", "harness.py", "student.py", "cases.json", "result.jsonl"])
            .current_dir(dir)
            .env_clear()
            .env("PATH", "/usr/local/bin:/usr/bin:/bin")
            .env("HOME", dir)
            .env("LANG", "C.UTF-8")
            .env("OPENBLAS_NUM_THREADS", "1")
            .env("OMP_NUM_THREADS", "1")
            .env("MKL_NUM_THREADS", "1")
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());

        let limits = ChildLimits {
            address_space: question.memory_limit,
            cpu_seconds: question.time_limit.ceil() as u64 + 1,
            file_size: self.config.file_size_limit,
            processes: drop_privileges.then_some(self.config.process_limit),
            uid: self.config.unprivileged_uid,
            gid: self.config.unprivileged_gid,
        };
        // SAFETY: the closure only calls async-signal-safe libc functions.
        unsafe {
            cmd.pre_exec(move || limits.apply());
        }
        cmd.spawn().map_err(|e| {
            SandboxError::Unavailable(format!("cannot start {}: {e}", self.config.interpreter.display()))
        })
    }
}

#[derive(Clone, Copy)]
struct ChildLimits {
    address_space: u64,
    cpu_seconds: u64,
    file_size: u64,
    processes: Option<u64>,
    uid: u32,
    gid: u32,
}

impl ChildLimits {
    fn apply(&self) -> std::io::Result<()> {
        fn set(resource: libc::__rlimit_resource_t, value: u64) -> std::io::Result<()> {
            let lim = libc::rlimit {
                rlim_cur: value as libc::rlim_t,
                rlim_max: value as libc::rlim_t,
            };
            if unsafe { libc::setrlimit(resource, &lim) } != 0 {
                return Err(std::io::Error::last_os_error());
            }
            Ok(())
        }
        if unsafe { libc::setpgid(0, 0) } != 0 {
            return Err(std::io::Error::last_os_error());
        }
        set(libc::RLIMIT_AS, self.address_space)?;
        set(libc::RLIMIT_CPU, self.cpu_seconds)?;
        set(libc::RLIMIT_FSIZE, self.file_size)?;
        set(libc::RLIMIT_CORE, 0)?;
        if let Some(processes) = self.processes {
            set(libc::RLIMIT_NPROC, processes)?;
            unsafe {
                if libc::setgroups(0, std::ptr::null()) != 0
                    || libc::setgid(self.gid) != 0
                    || libc::setuid(self.uid) != 0
                {
                    return Err(std::io::Error::last_os_error());
                }
            }
        }
        Ok(())
    }
}

fn chown(path: &Path, uid: u32, gid: u32) -> Result<(), SandboxError> {
    use std::os::unix::ffi::OsStrExt;
    let c_path = std::ffi::CString::new(path.as_os_str().as_bytes())
        .map_err(|e| SandboxError::Unavailable(e.to_string()))?;
    if unsafe { libc::chown(c_path.as_ptr(), uid, gid) } != 0 {
        return Err(SandboxError::Unavailable(format!(
            "chown {}: {}",
            path.display(),
            std::io::Error::last_os_error()
        )));
    }
    Ok(())
}

fn kill_group(pid: u32) {
    // The child leads its own process group, so this reaches anything it forked.
    unsafe {
        libc::killpg(pid as libc::pid_t, libc::SIGKILL);
    }
}

fn wait_with_deadline(child: &mut Child, started: Instant, limit: Duration) -> Result<(ExitStatus, bool), SandboxError> {
    let mut nap = Duration::from_millis(1);
    loop {
        match child.try_wait() {
            Ok(Some(status)) => return Ok((status, false)),
            Ok(None) => {}
            Err(e) => return Err(SandboxError::Unavailable(format!("wait failed: {e}"))),
        }
        let elapsed = started.elapsed();
        if elapsed >= limit {
            kill_group(child.id());
            let _ = child.kill();
            let status = child
                .wait()
                .map_err(|e| SandboxError::Unavailable(format!("wait failed: {e}")))?;
            return Ok((status, true));
        }
        thread::sleep(nap.min(limit - elapsed));
        nap = (nap * 2).min(Duration::from_millis(10));
    }
}

fn capture(stream: Option<impl Read + Send + 'static>, limit: usize) -> mpsc::Receiver<Captured> {
    let (tx, rx) = mpsc::channel();
    if let Some(mut stream) = stream {
        thread::spawn(move || {
            let mut kept = Vec::new();
            let mut total = 0u64;
            let mut buf = [0u8; 8192];
            loop {
                match stream.read(&mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(n) => {
                        total += n as u64;
                        let room = limit.saturating_sub(kept.len());
                        kept.extend_from_slice(&buf[..n.min(room)]);
                    }
                }
            }
            let _ = tx.send(Captured {
                text: String::from_utf8_lossy(&kept).into_owned(),
                total,
            });
        });
    } else {
        let _ = tx.send(Captured {
            text: String::new(),
            total: 0,
        });
    }
    rx
}

fn read_records(path: &Path) -> Vec<Record> {
    let Ok(text) = fs::read_to_string(path) else {
        return Vec::new();
    };
    text.lines()
        .filter_map(|line| serde_json::from_str(line).ok())
        .collect()
}

struct RunFacts {
    status: ExitStatus,
    timed_out: bool,
    wall_time: f64,
    stdout: Captured,
    stderr: Captured,
}

fn build_outcome(question: &QuestionSpec, records: Vec<Record>, facts: RunFacts) -> Result<ExecutionOutcome, SandboxError> {
    let total = question.test_cases.len() as u32;
    let mut passed = 0u32;
    let mut first_failure: Option<(ExecStatus, String)> = None;
    let mut load_error = None;
    let mut running = None;
    let mut finished = false;

    for record in records {
        match record {
            Record::Start { index } => running = Some(index),
            Record::Case {
                index,
                status,
                trace,
                observed,
                expected,
            } => {
                running = None;
                let call = question.test_cases.get(index).map_or("?", |c| c.call.as_str());
                match status {
                    CaseStatus::Pass => passed += 1,
                    CaseStatus::Fail if first_failure.is_none() => {
                        first_failure = Some((
                            ExecStatus::FailedAssertion,
                            format!(
                                "Test {}: {call}\n  expected: {expected}\n  observed: {observed}",
                                index + 1
                            ),
                        ));
                    }
                    CaseStatus::Error if first_failure.is_none() => {
                        first_failure = Some((
                            ExecStatus::RaisedError,
                            format!("Test {}: {call}\n{}", index + 1, trace.trim_end()),
                        ));
                    }
                    _ => {}
                }
            }
            Record::LoadError { trace } => load_error = Some(trace),
            Record::HarnessError { message } => return Err(SandboxError::Harness(message)),
            Record::Done => finished = true,
        }
    }

    let during = |running: Option<usize>| match running.and_then(|i| question.test_cases.get(i).map(|c| (i, c))) {
        Some((i, case)) => format!(" while running test {}: {}", i + 1, case.call),
        None => String::new(),
    };
    let with_earlier = |mut detail: String, earlier: Option<(ExecStatus, String)>| {
        if let Some((_, text)) = earlier {
            detail.push_str("\nEarlier failure:\n");
            detail.push_str(&text);
        }
        detail
    };

    let signal = facts.status.signal();
    let cpu_exhausted = signal == Some(libc::SIGXCPU) && facts.wall_time >= question.time_limit;
    let (status, failure_detail) = if facts.timed_out || cpu_exhausted {
        (
            ExecStatus::TimedOut,
            with_earlier(
                format!("Time limit of {}s exceeded{}", question.time_limit, during(running)),
                first_failure,
            ),
        )
    } else if let Some(trace) = load_error {
        (
            ExecStatus::RaisedError,
            format!("Error while loading the program:\n{}", trace.trim_end()),
        )
    } else if !finished {
        let cause = match (signal, facts.status.code()) {
            (Some(libc::SIGXCPU), _) => "CPU time limit exceeded".to_string(),
            (Some(sig), _) => format!("Program terminated by signal {sig}"),
            (None, Some(VIOLATION_EXIT)) => {
                let reason = facts
                    .stderr
                    .text
                    .lines()
                    .rev()
                    .find(|l| l.contains("sandbox policy violation"))
                    .unwrap_or("sandbox policy violation")
                    .to_string();
                format!("Program stopped: {reason}")
            }
            (None, Some(code)) => format!("Program exited with code {code} before all tests ran"),
            (None, None) => "Program ended abnormally".to_string(),
        };
        (ExecStatus::Crashed, with_earlier(format!("{cause}{}", during(running)), first_failure))
    } else if let Some((status, detail)) = first_failure {
        (status, detail)
    } else {
        (ExecStatus::Passed, String::new())
    };

    Ok(ExecutionOutcome {
        status,
        stdout_text: facts.stdout.text,
        stderr_text: facts.stderr.text,
        failure_detail,
        wall_time: facts.wall_time,
        tests_passed: passed,
        tests_total: total,
        stdout_bytes: facts.stdout.total,
    })
}
