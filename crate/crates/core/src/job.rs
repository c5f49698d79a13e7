//! Job configuration and the control keys shared by coordinator and workers.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::algorithms::Params;
use crate::error::{Error, Result};
use crate::maas::{MaasClient, StorageKey};
use crate::partition::PartitionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every partition stays resident in one worker for the whole job.
    Pinned,
    /// Workers claim, load, compute and persist partitions each superstep.
    Rotating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JobConfig {
    pub algorithm: String,
    pub params: Params,
    pub partitions: u32,
    pub max_worker: u32,
    pub threads: u32,
    /// First superstep that computes only active vertices; `None` disables.
    pub activation_start: Option<u64>,
    pub key_aggregation: bool,
    pub colocation_dedup: bool,
    pub preload: bool,
    pub compression: String,
    /// Memory configured per worker, billed in GB-seconds.
    pub memory_gb: f64,
    pub max_supersteps: u64,
    pub barrier_timeout_ms: u64,
    pub poll_interval_ms: Option<u64>,
    pub maas_uri: String,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            algorithm: String::new(),
            params: Params::new(),
            partitions: 1,
            max_worker: 1,
            threads: 1,
            activation_start: None,
            key_aggregation: true,
            colocation_dedup: true,
            preload: true,
            compression: "none".into(),
            memory_gb: 1.0,
            max_supersteps: 10_000,
            barrier_timeout_ms: 60_000,
            poll_interval_ms: None,
            maas_uri: "mem://".into(),
        }
    }
}

impl JobConfig {
    pub fn new(algorithm: &str, partitions: u32, max_worker: u32, threads: u32) -> Self {
        JobConfig { algorithm: algorithm.into(), partitions, max_worker, threads, ..Self::default() }
    }

    pub fn mode(&self) -> Mode {
        if u64::from(self.max_worker) * u64::from(self.threads) >= u64::from(self.partitions) {
            Mode::Pinned
        } else {
            Mode::Rotating
        }
    }

    /// Workers actually launched; pinned mode never starts a worker that
    /// would own no partition.
    pub fn num_workers(&self) -> u32 {
        match self.mode() {
            Mode::Pinned => self.max_worker.min(self.partitions),
            Mode::Rotating => self.max_worker,
        }
    }

    pub fn barrier_timeout(&self) -> Duration {
        Duration::from_millis(self.barrier_timeout_ms)
    }

    pub fn validate(&self) -> Result<()> {
        if self.partitions == 0 || self.max_worker == 0 || self.threads == 0 {
            return Err(Error::Config("partitions, max_worker and threads must be at least 1".into()));
        }
        if self.max_supersteps == 0 {
            return Err(Error::Config("max_supersteps must be at least 1".into()));
        }
        if !(self.memory_gb >= 0.0) {
            return Err(Error::Config("memory_gb must be non-negative".into()));
        }
        crate::codec::compression_by_name(&self.compression)?;
        Ok(())
    }
}

/// Pinned-mode owner of a partition: round-robin by id.
pub fn pinned_worker(pid: PartitionId, num_workers: u32) -> u32 {
    pid % num_workers
}

/// What the coordinator publishes under `ctl/job` for stateless workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    pub config: JobConfig,
    pub mode: Mode,
    pub num_workers: u32,
    pub vertex_count: u64,
}

impl JobSpec {
    pub fn read(client: &MaasClient) -> Result<JobSpec> {
        Ok(serde_json::from_slice(&client.get(&keys::job())?)?)
    }
}

pub mod keys {
    use crate::maas::StorageKey;

    pub fn superstep() -> StorageKey {
        StorageKey::ctl("superstep")
    }

    pub fn unfinished() -> StorageKey {
        StorageKey::ctl("unfinished")
    }

    pub fn keep_computing() -> StorageKey {
        StorageKey::ctl("keep_computing")
    }

    pub fn finish() -> StorageKey {
        StorageKey::ctl("finish")
    }

    pub fn abort() -> StorageKey {
        StorageKey::ctl("abort")
    }

    /// Unclaimed partitions of one superstep. A worker that fell behind
    /// finds its stale queue empty instead of claiming a later superstep's
    /// work.
    pub fn queue(superstep: u64) -> StorageKey {
        StorageKey::new(crate::maas::Namespace::Ctl, ["queue".to_string(), superstep.to_string()])
    }

    /// Partitions whose final values still need writing (rotating mode).
    pub fn final_queue() -> StorageKey {
        StorageKey::new(crate::maas::Namespace::Ctl, ["queue", "final"])
    }

    pub fn job() -> StorageKey {
        StorageKey::ctl("job")
    }
}

/// Collected `ctl/error/{worker}` diagnostics.
pub fn worker_errors(client: &MaasClient, num_workers: u32) -> Vec<String> {
    (0..num_workers)
        .filter_map(|w| client.get_opt(&StorageKey::worker_error(w)).ok().flatten())
        .map(|b| String::from_utf8_lossy(&b).into_owned())
        .collect()
}
