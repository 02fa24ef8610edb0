//! Supervised worker processes speaking the line protocol.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::domain::{DedupeKey, Heuristic, ProblemInstance};
use crate::problems::{verify_solution, EpisodeResult};

use super::protocol::{Request, Response, WirePayload};
use super::ExecError;

pub const TIMEOUT: &str = "timeout";
pub const WORKER_FAULT: &str = "worker-fault";
pub const INFEASIBLE_TRACE: &str = "infeasible-trace";

/// Spawn attempts per slot before the pool gives up.
const SPAWN_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkerConfig {
    /// Program and arguments; empty means "this executable with `worker`".
    pub command: Vec<String>,
    pub pool_size: usize,
    /// Wall-clock budget per request, in seconds.
    pub timeout_secs: f64,
    pub max_code_bytes: usize,
}

impl Default for WorkerConfig {
    fn default() -> Self {
        WorkerConfig {
            command: Vec::new(),
            pool_size: thread::available_parallelism().map_or(4, |n| n.get()).min(8),
            timeout_secs: 10.0,
            max_code_bytes: 64 * 1024,
        }
    }
}

impl WorkerConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }

    fn resolved_command(&self) -> Result<Vec<String>, ExecError> {
        if !self.command.is_empty() {
            return Ok(self.command.clone());
        }
        let exe = std::env::current_exe().map_err(|e| ExecError::Spawn(e.to_string()))?;
        Ok(vec![exe.to_string_lossy().into_owned(), "worker".into()])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkerState {
    Idle,
    Loaded(DedupeKey),
    Busy,
    Dead,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkerStats {
    pub evals: usize,
    pub timeouts: usize,
    pub crashes: usize,
}

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<Option<String>>,
}

impl Process {
    fn spawn(command: &[String]) -> Result<Process, ExecError> {
        let mut child = Command::new(&command[0])
            .args(&command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| ExecError::Spawn(format!("{}: {e}", command[0])))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(Some(l)).is_err() {
                            return;
                        }
                    }
                    Err(_) => break,
                }
            }
            let _ = tx.send(None);
        });
        Ok(Process { child, stdin, lines })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// One pool slot. A handle is owned by a single caller while checked out,
/// so at most one request is ever in flight on it.
pub struct WorkerHandle {
    token: u64,
    state: WorkerState,
    stats: WorkerStats,
    process: Option<Process>,
    next_id: u64,
}

enum Failure {
    Timeout,
    Fault,
}

impl WorkerHandle {
    fn new(token: u64) -> Self {
        WorkerHandle {
            token,
            state: WorkerState::Dead,
            stats: WorkerStats::default(),
            process: None,
            next_id: 0,
        }
    }

    pub fn token(&self) -> u64 {
        self.token
    }

    pub fn state(&self) -> &WorkerState {
        &self.state
    }

    pub fn stats(&self) -> WorkerStats {
        self.stats
    }

    fn ensure_alive(&mut self, command: &[String]) -> Result<(), ExecError> {
        if self.process.is_some() && self.state != WorkerState::Dead {
            return Ok(());
        }
        let mut last = None;
        for _ in 0..SPAWN_ATTEMPTS {
            match Process::spawn(command) {
                Ok(p) => {
                    self.process = Some(p);
                    self.state = WorkerState::Idle;
                    return Ok(());
                }
                Err(e) => last = Some(e),
            }
        }
        Err(ExecError::PoolExhausted(last.map_or_else(String::new, |e| e.to_string())))
    }

    fn kill(&mut self) {
        if let Some(p) = self.process.take() {
            p.kill();
        }
        self.state = WorkerState::Dead;
    }

    /// Sends one request and waits for its reply.
    fn request(&mut self, build: impl FnOnce(u64) -> Request, timeout: Duration) -> Result<Response, Failure> {
        self.next_id += 1;
        let req = build(self.next_id);
        let process = self.process.as_mut().ok_or(Failure::Fault)?;
        let mut line = serde_json::to_string(&req).expect("requests serialize");
        line.push('\n');
        if process.stdin.write_all(line.as_bytes()).and_then(|_| process.stdin.flush()).is_err() {
            return Err(Failure::Fault);
        }
        let reply = match process.lines.recv_timeout(timeout) {
            Ok(Some(l)) => l,
            Ok(None) | Err(RecvTimeoutError::Disconnected) => return Err(Failure::Fault),
            Err(RecvTimeoutError::Timeout) => return Err(Failure::Timeout),
        };
        let resp: Response = serde_json::from_str(&reply).map_err(|_| Failure::Fault)?;
        if resp.id != Some(req.id()) {
            return Err(Failure::Fault);
        }
        Ok(resp)
    }

    fn fail(&mut self, f: Failure) -> EpisodeResult {
        self.kill();
        match f {
            Failure::Timeout => {
                self.stats.timeouts += 1;
                EpisodeResult::failed(TIMEOUT, 0)
            }
            Failure::Fault => {
                self.stats.crashes += 1;
                EpisodeResult::failed(WORKER_FAULT, 0)
            }
        }
    }

    /// Runs one episode of `heuristic` on `instance` in this worker.
    pub fn run(
        &mut self,
        config: &WorkerConfig,
        command: &[String],
        heuristic: &Heuristic,
        instance: &ProblemInstance,
    ) -> Result<EpisodeResult, ExecError> {
        self.ensure_alive(command)?;
        let timeout = config.timeout();
        if self.state != WorkerState::Loaded(heuristic.dedupe_key.clone()) {
            self.state = WorkerState::Busy;
            let code = heuristic.code.clone();
            let resp = match self.request(|id| Request::Load { id, code }, timeout) {
                Ok(r) => r,
                Err(f) => return Ok(self.fail(f)),
            };
            if !resp.ok {
                self.state = WorkerState::Idle;
                let msg = resp.error.unwrap_or_default();
                return Ok(EpisodeResult::failed(format!("load-error: {msg}"), 0));
            }
        }
        self.state = WorkerState::Busy;
        let task = instance.task();
        let payload = WirePayload::from(instance.payload());
        let resp = match self.request(|id| Request::Eval { id, task, payload }, timeout) {
            Ok(r) => r,
            Err(f) => return Ok(self.fail(f)),
        };
        self.stats.evals += 1;
        self.state = WorkerState::Loaded(heuristic.dedupe_key.clone());
        if !resp.ok {
            let msg = resp.error.unwrap_or_default();
            return Ok(EpisodeResult::failed(format!("heuristic-error: {msg}"), 0));
        }
        let Some(trace) = resp.trace else {
            return Ok(self.fail(Failure::Fault));
        };
        let raw = match verify_solution(instance, &trace) {
            Ok(raw) => raw,
            Err(reason) => {
                log::debug!("worker {} returned an infeasible trace: {reason}", self.token);
                return Ok(EpisodeResult::failed(INFEASIBLE_TRACE, resp.decisions.unwrap_or(0)));
            }
        };
        if let Some(claimed) = resp.raw {
            if (claimed - raw).abs() > 1e-6 * raw.abs().max(1.0) {
                log::debug!("worker {} claimed {claimed}, verified {raw}", self.token);
            }
        }
        Ok(EpisodeResult {
            raw,
            gap: instance.gap(raw),
            decisions: resp.decisions.unwrap_or(trace.len()),
            violation: None,
            trace,
            detours: resp.detours.unwrap_or(0),
        })
    }
}

impl Drop for WorkerHandle {
    fn drop(&mut self) {
        self.kill();
    }
}

/// A fixed number of worker slots, spawned lazily and respawned after
/// timeouts or crashes.
pub struct WorkerPool {
    config: WorkerConfig,
    command: Vec<String>,
    slots: Mutex<Vec<Option<WorkerHandle>>>,
    returned: Condvar,
}

impl WorkerPool {
    pub fn new(config: WorkerConfig) -> Result<Self, ExecError> {
        if config.pool_size == 0 {
            return Err(ExecError::Config("pool size must be positive".into()));
        }
        if !(config.timeout_secs > 0.0 && config.timeout_secs.is_finite()) {
            return Err(ExecError::Config(format!("timeout {} must be positive", config.timeout_secs)));
        }
        let command = config.resolved_command()?;
        let slots = (0..config.pool_size as u64).map(|t| Some(WorkerHandle::new(t))).collect();
        Ok(WorkerPool {
            config,
            command,
            slots: Mutex::new(slots),
            returned: Condvar::new(),
        })
    }

    pub fn config(&self) -> &WorkerConfig {
        &self.config
    }

    /// Sums per-worker statistics over slots that are not checked out.
    pub fn stats(&self) -> WorkerStats {
        let slots = self.slots.lock().expect("pool lock");
        slots.iter().flatten().fold(WorkerStats::default(), |acc, h| WorkerStats {
            evals: acc.evals + h.stats.evals,
            timeouts: acc.timeouts + h.stats.timeouts,
            crashes: acc.crashes + h.stats.crashes,
        })
    }

    /// Takes a free slot, preferring one that already holds `key`.
    fn checkout(&self, key: &DedupeKey) -> WorkerHandle {
        let mut slots = self.slots.lock().expect("pool lock");
        loop {
            let loaded = WorkerState::Loaded(key.clone());
            let pick = slots
                .iter()
                .position(|s| s.as_ref().is_some_and(|h| h.state == loaded))
                .or_else(|| slots.iter().position(Option::is_some));
            if let Some(i) = pick {
                return slots[i].take().expect("slot is free");
            }
            slots = self.returned.wait(slots).expect("pool lock");
        }
    }

    fn checkin(&self, handle: WorkerHandle) {
        let mut slots = self.slots.lock().expect("pool lock");
        let slot = slots.get_mut(handle.token as usize).expect("token indexes a slot");
        *slot = Some(handle);
        self.returned.notify_one();
    }

    /// Runs a single episode on some free worker.
    pub fn execute(&self, heuristic: &Heuristic, instance: &ProblemInstance) -> Result<EpisodeResult, ExecError> {
        if heuristic.code.len() > self.config.max_code_bytes {
            return Ok(EpisodeResult::failed(
                format!("code-too-large: {} bytes", heuristic.code.len()),
                0,
            ));
        }
        let mut handle = self.checkout(&heuristic.dedupe_key);
        let out = handle.run(&self.config, &self.command, heuristic, instance);
        self.checkin(handle);
        out
    }

    /// Runs every instance, at most `pool_size` at a time. Stops dispatching
    /// new episodes once one is invalid, since the vector is then invalid
    /// anyway; results are returned in instance order with `None` for
    /// skipped episodes.
    pub fn execute_all(
        &self,
        heuristic: &Heuristic,
        instances: &[ProblemInstance],
    ) -> Result<Vec<Option<EpisodeResult>>, ExecError> {
        let next = AtomicUsize::new(0);
        let stop = AtomicBool::new(false);
        let results: Vec<Mutex<Option<EpisodeResult>>> = instances.iter().map(|_| Mutex::new(None)).collect();
        let error: Mutex<Option<ExecError>> = Mutex::new(None);
        let threads = self.config.pool_size.min(instances.len());
        thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(|| loop {
                    if stop.load(Ordering::Relaxed) {
                        return;
                    }
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= instances.len() {
                        return;
                    }
                    match self.execute(heuristic, &instances[i]) {
                        Ok(r) => {
                            if !r.is_valid() {
                                stop.store(true, Ordering::Relaxed);
                            }
                            *results[i].lock().expect("result lock") = Some(r);
                        }
                        Err(e) => {
                            stop.store(true, Ordering::Relaxed);
                            error.lock().expect("error lock").get_or_insert(e);
                        }
                    }
                });
            }
        });
        if let Some(e) = error.into_inner().expect("error lock") {
            return Err(e);
        }
        Ok(results.into_iter().map(|m| m.into_inner().expect("result lock")).collect())
    }
}
