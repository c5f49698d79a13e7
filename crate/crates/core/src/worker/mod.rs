//! Stateless compute task: loads partitions and messages, runs PEval/IncVal,
//! writes messages and results back, and joins the storage barrier.

mod pinned;
mod rotating;
mod routing;
mod state;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Duration;

pub use routing::{route_targets, Outbox};
pub use state::{decode_final, decode_partial, encode_final, encode_partial, MirrorStore, PartialResult};

use crate::algorithms::{compute_partition, Algorithm, ComputeInput, ComputeOutput, Registry};
use crate::codec::{compression_by_name, decode_message_block, encode_message_block, Compression, MessageBlock};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::job::{keys, JobSpec, Mode};
use crate::maas::{MaasClient, StorageKey};
use crate::metrics::EventKind;
use crate::partitioner::{read_manifest, PartitionManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Compute,
    Finish,
    Abort,
}

struct WorkerEnv<'a> {
    client: &'a MaasClient,
    worker: u32,
    spec: JobSpec,
    alg: Arc<dyn Algorithm>,
    manifest: PartitionManifest,
    compression: Arc<dyn Compression>,
    wait: Duration,
}

impl WorkerEnv<'_> {
    fn width(&self) -> usize {
        self.alg.value_kind().width()
    }

    fn threads(&self) -> usize {
        self.spec.config.threads as usize
    }

    fn activation_configured(&self) -> bool {
        self.spec.config.activation_start.is_some() && self.alg.supports_activation()
    }

    /// Blocks until superstep `s` starts or the job ends.
    fn wait_phase(&self, s: u64) -> Result<Phase> {
        self.client.wait_until(self.wait, &format!("superstep {s}"), || {
            if self.client.flag_set(&keys::abort())? {
                return Ok(Some(Phase::Abort));
            }
            if self.client.flag_set(&keys::finish())? {
                return Ok(Some(Phase::Finish));
            }
            let cur = self.client.counter(&keys::superstep())?;
            Ok((cur as u64 >= s).then_some(Phase::Compute))
        })
    }

    /// Global aggregate from superstep `s`, summed in partition order.
    fn read_aggregate(&self, s: u64) -> Result<f64> {
        let mut total = 0.0;
        for pid in 0..self.manifest.num_partitions {
            let b = self.client.get(&StorageKey::aggregate(s, pid))?;
            let arr: [u8; 8] = b.as_slice().try_into().map_err(|_| Error::codec("aggregate must be 8 bytes"))?;
            total += f64::from_le_bytes(arr);
        }
        Ok(total)
    }

    fn write_aggregate(&self, s: u64, pid: u32, x: f64) -> Result<()> {
        self.client.put(&StorageKey::aggregate(s, pid), &x.to_le_bytes())
    }

    fn put_block(&self, key: &StorageKey, s: u64, dst: u32, entries: Vec<(VertexId, u64)>) -> Result<()> {
        let block = MessageBlock {
            src_worker: self.worker,
            dst_worker: dst,
            superstep: s,
            value_width: self.width() as u8,
            entries,
        };
        self.client.put(key, &encode_message_block(&block, self.compression.as_ref())?)
    }

    /// Fetches a block if present and checks that its header matches the key.
    fn get_block(&self, key: &StorageKey, s: u64, src: u32, dst: u32) -> Result<Option<MessageBlock>> {
        let Some(bytes) = self.client.get_opt(key)? else { return Ok(None) };
        let block = decode_message_block(&bytes, self.width() as u8, self.compression.as_ref())?;
        if block.src_worker != src || block.dst_worker != dst || block.superstep != s {
            return Err(Error::codec(format!(
                "block under {key} has header {}->{} superstep {}",
                block.src_worker, block.dst_worker, block.superstep
            )));
        }
        Ok(Some(block))
    }

    fn put_vertex_message(&self, s: u64, v: VertexId, word: u64) -> Result<()> {
        self.client.put(&StorageKey::vertex_message(s, v), &word.to_le_bytes()[..self.width()])
    }

    fn get_vertex_message(&self, s: u64, v: VertexId) -> Result<Option<u64>> {
        let Some(b) = self.client.get_opt(&StorageKey::vertex_message(s, v))? else { return Ok(None) };
        if b.len() != self.width() {
            return Err(Error::codec(format!("vertex message for {v} has {} bytes", b.len())));
        }
        let mut buf = [0u8; 8];
        buf[..b.len()].copy_from_slice(&b);
        Ok(Some(u64::from_le_bytes(buf)))
    }

    fn decrement(&self, s: u64, count: u32) -> Result<()> {
        let remaining = self.client.atomic_add(&keys::unfinished(), -i64::from(count))?;
        self.client.event(EventKind::Decremented { superstep: s, count, remaining });
        Ok(())
    }
}

/// Runs PEval/IncVal over several partitions, one thread each when more
/// than one thread is configured. A panicking plugin becomes an error.
fn compute_all(
    alg: &dyn Algorithm,
    inputs: Vec<ComputeInput<'_>>,
    threads: usize,
    worker: u32,
) -> Result<Vec<ComputeOutput>> {
    let run = |input: ComputeInput<'_>| {
        catch_unwind(AssertUnwindSafe(|| compute_partition(alg, input))).map_err(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "plugin panicked".into());
            Error::Worker { worker, reason: msg }
        })
    };
    if threads <= 1 || inputs.len() <= 1 {
        return inputs.into_iter().map(run).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = inputs.into_iter().map(|input| scope.spawn(move || run(input))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Worker { worker, reason: "compute thread died".into() })))
            .collect()
    })
}

/// Entry point of one worker task. All job parameters are read from the
/// store; on failure the worker records a diagnostic and raises the abort
/// flag before returning the error.
pub fn worker_main(client: &MaasClient, worker: u32, registry: &Registry) -> Result<()> {
    client.event(EventKind::WorkerStarted);
    let result = run_worker(client, worker, registry);
    if let Err(e) = &result {
        let _ = client.put(&StorageKey::worker_error(worker), format!("worker {worker}: {e}").as_bytes());
        let _ = client.set_flag(&keys::abort());
    }
    client.event(EventKind::WorkerExited { ok: result.is_ok() });
    result
}

fn run_worker(client: &MaasClient, worker: u32, registry: &Registry) -> Result<()> {
    if client.flag_set(&keys::finish())? {
        return Ok(());
    }
    let spec = JobSpec::read(client)?;
    if worker >= spec.num_workers {
        return Err(Error::Config(format!("worker id {worker} >= worker count {}", spec.num_workers)));
    }
    let alg = registry.build(&spec.config.algorithm, &spec.config.params)?;
    let manifest = read_manifest(client)?;
    let env = WorkerEnv {
        client,
        worker,
        compression: compression_by_name(&spec.config.compression)?,
        wait: spec.config.barrier_timeout() * 2,
        spec,
        alg,
        manifest,
    };
    match env.spec.mode {
        Mode::Pinned => pinned::run(&env),
        Mode::Rotating => rotating::run(&env),
    }
}
