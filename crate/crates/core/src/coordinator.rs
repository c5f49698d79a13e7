//! Drives the superstep protocol through the store: job init, worker
//! launch, barrier, advance or finish, and result gathering. It never runs
//! vertex programs itself.

use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crate::algorithms::{GraphInfo, Registry, ValueKind};
use crate::error::{Error, Result};
use crate::job::{keys, worker_errors, JobConfig, JobSpec, Mode};
use crate::maas::{Actor, MaasClient, Namespace, StorageKey};
use crate::metrics::EventKind;
use crate::partitioner::{read_manifest, PartitionManifest};
use crate::worker::{decode_final, worker_main};

/// A started worker task.
pub trait WorkerHandle: Send {
    fn is_finished(&self) -> bool;
    /// Waits for exit and returns how long the task lived.
    fn join(self: Box<Self>) -> Result<Duration>;
}

/// Starts worker tasks; the platform's function invoker.
pub trait Launcher: Send + Sync {
    fn launch(&self, worker: u32) -> Result<Box<dyn WorkerHandle>>;
}

/// Runs workers as threads of this process, sharing the store handle.
pub struct ThreadLauncher {
    client: MaasClient,
    registry: Arc<Registry>,
}

impl ThreadLauncher {
    pub fn new(client: &MaasClient, registry: Arc<Registry>) -> Self {
        ThreadLauncher { client: client.for_actor(Actor::Tool), registry }
    }
}

struct ThreadHandle {
    inner: JoinHandle<Result<()>>,
    started: Instant,
    ended: Arc<std::sync::OnceLock<Instant>>,
}

impl WorkerHandle for ThreadHandle {
    fn is_finished(&self) -> bool {
        self.inner.is_finished()
    }

    fn join(self: Box<Self>) -> Result<Duration> {
        let res = self.inner.join().map_err(|_| Error::Worker { worker: u32::MAX, reason: "worker thread panicked".into() })?;
        let ended = self.ended.get().copied().unwrap_or_else(Instant::now);
        res.map(|()| ended - self.started)
    }
}

impl Launcher for ThreadLauncher {
    fn launch(&self, worker: u32) -> Result<Box<dyn WorkerHandle>> {
        let client = self.client.for_actor(Actor::Worker(worker));
        let registry = self.registry.clone();
        let ended = Arc::new(std::sync::OnceLock::new());
        let done = ended.clone();
        let inner = std::thread::Builder::new().name(format!("worker-{worker}")).spawn(move || {
            let r = worker_main(&client, worker, &registry);
            let _ = done.set(Instant::now());
            r
        })?;
        Ok(Box::new(ThreadHandle { inner, started: Instant::now(), ended }))
    }
}

/// Values gathered after a finished job, indexed by dense vertex id.
#[derive(Debug, Clone)]
pub struct JobResult {
    pub values: Vec<u64>,
    pub kind: ValueKind,
    /// Supersteps executed, counting the PEval superstep.
    pub supersteps: u64,
    pub mode: Mode,
    pub num_workers: u32,
    pub wall: Duration,
    /// Time from each superstep's start to its barrier.
    pub superstep_walls: Vec<Duration>,
    pub worker_lifetimes: Vec<Duration>,
    /// True when the engine cap, not the algorithm, ended the job.
    pub hit_cap: bool,
}

impl JobResult {
    pub fn render(&self, v: usize) -> String {
        self.kind.render(self.values[v])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuperstepSummary {
    pub superstep: u64,
    pub keep_computing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    Continue,
    Done,
}

pub struct Coordinator<'a> {
    client: MaasClient,
    config: JobConfig,
    registry: &'a Registry,
}

impl<'a> Coordinator<'a> {
    pub fn new(client: &MaasClient, config: JobConfig, registry: &'a Registry) -> Self {
        let mut client = client.for_actor(Actor::Coordinator);
        if let Some(ms) = config.poll_interval_ms {
            client = client.with_poll_interval(Duration::from_millis(ms));
        }
        Coordinator { client, config, registry }
    }

    pub fn client(&self) -> &MaasClient {
        &self.client
    }

    /// Writes fresh control state and the job description.
    pub fn init_job(&self) -> Result<(JobSpec, PartitionManifest)> {
        let cfg = &self.config;
        cfg.validate()?;
        let manifest = read_manifest(&self.client)?;
        if manifest.num_partitions != cfg.partitions {
            return Err(Error::Setup(format!(
                "manifest has {} partitions, job asks for {}",
                manifest.num_partitions, cfg.partitions
            )));
        }
        let alg = self.registry.build(&cfg.algorithm, &cfg.params).map_err(|e| match e {
            Error::UnknownAlgorithm(_) => Error::Setup(e.to_string()),
            other => other,
        })?;
        alg.validate(&GraphInfo {
            vertex_count: manifest.vertex_count,
            directed: manifest.directed,
            weighted: manifest.weighted,
        })?;

        for ns in [Namespace::Msg, Namespace::Result, Namespace::Ctl] {
            self.client.clear_namespace(ns)?;
        }
        let spec = JobSpec {
            config: cfg.clone(),
            mode: cfg.mode(),
            num_workers: cfg.num_workers(),
            vertex_count: manifest.vertex_count,
        };
        self.client.put(&keys::job(), &serde_json::to_vec(&spec)?)?;
        self.client.init_counter(&keys::unfinished(), i64::from(cfg.partitions))?;
        if spec.mode == Mode::Rotating {
            self.refill_queue(&keys::queue(0))?;
        }
        // workers start polling on this counter, so it goes last
        self.client.init_counter(&keys::superstep(), 0)?;
        Ok((spec, manifest))
    }

    fn refill_queue(&self, key: &StorageKey) -> Result<()> {
        let all: Vec<u32> = (0..self.config.partitions).collect();
        self.client.queue_init(key, &all)
    }

    pub fn invoke_workers(&self, spec: &JobSpec, launcher: &dyn Launcher) -> Result<Vec<Box<dyn WorkerHandle>>> {
        let mut handles = Vec::with_capacity(spec.num_workers as usize);
        for w in 0..spec.num_workers {
            match launcher.launch(w) {
                Ok(h) => handles.push(h),
                Err(e) => {
                    self.client.set_flag(&keys::abort())?;
                    self.client.set_flag(&keys::finish())?;
                    for h in handles {
                        let _ = h.join();
                    }
                    return Err(Error::Aborted { superstep: 0, reason: format!("launching worker {w}: {e}") });
                }
            }
        }
        Ok(handles)
    }

    /// Returns once every partition has reported for superstep `s`.
    pub fn barrier_wait(&self, s: u64, handles: &[Box<dyn WorkerHandle>]) -> Result<SuperstepSummary> {
        self.wait_unfinished(s, handles, false)?;
        self.client.event(EventKind::BarrierPassed { superstep: s });
        Ok(SuperstepSummary { superstep: s, keep_computing: self.client.flag_set(&keys::keep_computing())? })
    }

    /// During the final write-back workers exit as soon as they are done,
    /// so exits only count as crashes while `exits_ok` is false.
    fn wait_unfinished(&self, s: u64, handles: &[Box<dyn WorkerHandle>], exits_ok: bool) -> Result<()> {
        let timeout = self.config.barrier_timeout();
        let outcome = self.client.wait_until(timeout, &format!("barrier {s}"), || {
            if self.client.flag_set(&keys::abort())? {
                return Ok(Some(Err("a worker raised the abort flag".to_string())));
            }
            if self.client.counter(&keys::unfinished())? <= 0 {
                return Ok(Some(Ok(())));
            }
            // workers only exit on finish or abort, so an early exit is a crash
            if !exits_ok && handles.iter().any(|h| h.is_finished()) {
                return Ok(Some(Err("a worker exited before the barrier".to_string())));
            }
            if handles.iter().all(|h| h.is_finished()) && !handles.is_empty() {
                // one last look: the final decrement may land just before exit
                if self.client.counter(&keys::unfinished())? <= 0 {
                    return Ok(Some(Ok(())));
                }
                return Ok(Some(Err("all workers exited with partitions unfinished".to_string())));
            }
            Ok(None)
        });
        let failure = match outcome {
            Ok(Ok(())) => None,
            Ok(Err(reason)) => Some(reason),
            Err(Error::Storage(msg)) if msg.contains("timed out") => {
                Some(format!("barrier timed out after {} ms", timeout.as_millis()))
            }
            Err(e) => return Err(e),
        };
        if let Some(reason) = failure {
            self.client.set_flag(&keys::abort())?;
            let diag = worker_errors(&self.client, self.config.num_workers());
            let reason = if diag.is_empty() { reason } else { format!("{reason}; {}", diag.join("; ")) };
            return Err(Error::Aborted { superstep: s, reason });
        }
        Ok(())
    }

    /// Starts superstep `s + 1` or declares the job done. `cap` bounds the
    /// total number of supersteps.
    pub fn advance_or_finish(&self, summary: SuperstepSummary, cap: u64) -> Result<Advance> {
        let s = summary.superstep;
        if !summary.keep_computing || s + 1 >= cap {
            return Ok(Advance::Done);
        }
        self.client.clear_flag(&keys::keep_computing())?;
        self.client.init_counter(&keys::unfinished(), i64::from(self.config.partitions))?;
        if self.config.mode() == Mode::Rotating {
            self.refill_queue(&keys::queue(s + 1))?;
        }
        if let Some(r) = self.client.recorder() {
            r.record_rollover(Actor::Coordinator, s);
        }
        self.client.atomic_add(&keys::superstep(), 1)?;
        self.client.set_superstep(s + 1);
        Ok(Advance::Continue)
    }

    /// Sets the finish flag and waits for workers to write final values.
    fn finish(&self, s: u64, handles: &[Box<dyn WorkerHandle>]) -> Result<()> {
        self.client.init_counter(&keys::unfinished(), i64::from(self.config.partitions))?;
        if self.config.mode() == Mode::Rotating {
            self.refill_queue(&keys::final_queue())?;
        }
        self.client.set_flag(&keys::finish())?;
        self.client.event(EventKind::Finished { superstep: s });
        self.wait_unfinished(s, handles, true)
    }

    pub fn gather(&self, manifest: &PartitionManifest, kind: ValueKind) -> Result<Vec<u64>> {
        let mut values = vec![0u64; manifest.vertex_count as usize];
        let mut seen = vec![false; values.len()];
        for pid in 0..manifest.num_partitions {
            let ids = manifest.inner_ids(pid)?;
            let words = decode_final(&self.client.get(&StorageKey::final_result(pid))?, ids.len(), kind.width())?;
            for (v, w) in ids.into_iter().zip(words) {
                if std::mem::replace(&mut seen[v as usize], true) {
                    return Err(Error::Contract(format!("vertex {v} reported by two partitions")));
                }
                values[v as usize] = w;
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Contract(format!("vertex {v} missing from results")));
        }
        Ok(values)
    }

    pub fn run(&self, launcher: &dyn Launcher) -> Result<JobResult> {
        let start = Instant::now();
        let (spec, manifest) = self.init_job()?;
        let alg = self.registry.build(&self.config.algorithm, &self.config.params)?;
        let cap = alg.max_supersteps().map_or(self.config.max_supersteps, |m| m.min(self.config.max_supersteps));
        log::info!(
            "job {} p={} mode={:?} workers={}",
            self.config.algorithm,
            self.config.partitions,
            spec.mode,
            spec.num_workers
        );

        let handles = self.invoke_workers(&spec, launcher)?;
        let mut walls = Vec::new();
        let mut s = 0u64;
        let mut step_start = Instant::now();
        let outcome = loop {
            let summary = match self.barrier_wait(s, &handles) {
                Ok(x) => x,
                Err(e) => break Err(e),
            };
            walls.push(step_start.elapsed());
            step_start = Instant::now();
            match self.advance_or_finish(summary, cap) {
                Ok(Advance::Continue) => s += 1,
                Ok(Advance::Done) => break Ok(summary.keep_computing),
                Err(e) => break Err(e),
            }
        };
        let outcome = outcome.and_then(|hit_cap| self.finish(s, &handles).map(|()| hit_cap));
        if outcome.is_err() {
            let _ = self.client.set_flag(&keys::abort());
        }
        let mut lifetimes = Vec::with_capacity(handles.len());
        let mut join_err = None;
        for h in handles {
            match h.join() {
                Ok(d) => lifetimes.push(d),
                Err(e) => join_err = join_err.or(Some(e)),
            }
        }
        let hit_cap = outcome?;
        if let Some(e) = join_err {
            return Err(e);
        }
        let values = self.gather(&manifest, alg.output_kind())?;
        Ok(JobResult {
            values,
            kind: alg.output_kind(),
            supersteps: s + 1,
            mode: spec.mode,
            num_workers: spec.num_workers,
            wall: start.elapsed(),
            superstep_walls: walls,
            worker_lifetimes: lifetimes,
            hit_cap,
        })
    }
}
