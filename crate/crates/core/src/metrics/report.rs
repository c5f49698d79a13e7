use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EventKind, OpCounts, Recorder};
use crate::coordinator::JobResult;
use crate::job::{JobConfig, Mode};
use crate::maas::{Actor, Namespace};
use crate::partitioner::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpRecord {
    pub actor: Actor,
    pub superstep: u64,
    pub namespace: String,
    #[serde(flatten)]
    pub counts: OpCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub algorithm: String,
    pub partitions: u32,
    pub max_worker: u32,
    pub threads: u32,
    pub mode: Mode,
    pub workers: u32,
    pub supersteps: u64,
    pub wall_seconds: f64,
    pub superstep_seconds: Vec<f64>,
    pub worker_lifetime_seconds: Vec<f64>,
    /// Time each worker spent between a superstep start and its decrement.
    pub worker_busy_seconds: Vec<f64>,
    pub core_seconds: f64,
    pub gb_seconds: f64,
    pub ops: Vec<OpRecord>,
    /// Worker reads and writes in the message namespace.
    pub msg_key_ops: u64,
    pub message_bytes_out: u64,
    pub message_bytes_in: u64,
    pub max_msg_ops_per_worker_step: u64,
    pub peak_concurrency: u32,
    /// Set when worker-side logs were unavailable (e.g. separate processes).
    pub partial: bool,
}

/// Billing from lifetimes: cores and configured memory times seconds.
pub fn cost(lifetimes: &[Duration], threads: u32, memory_gb: f64) -> (f64, f64) {
    let secs: f64 = lifetimes.iter().map(Duration::as_secs_f64).sum();
    (secs * f64::from(threads), secs * memory_gb)
}

pub fn config_hash(config: &JobConfig) -> String {
    let json = serde_json::to_vec(config).unwrap_or_default();
    sha256_hex(&json)[..16].to_string()
}

/// Message-namespace operations per (worker, superstep).
pub fn msg_ops_per_worker_step(ops: &BTreeMap<(Actor, u64, Namespace), OpCounts>) -> BTreeMap<(u32, u64), u64> {
    let mut out = BTreeMap::new();
    for (&(actor, s, ns), c) in ops {
        if let (Actor::Worker(w), Namespace::Msg) = (actor, ns) {
            *out.entry((w, s)).or_insert(0) += c.total();
        }
    }
    out
}

pub fn collect(config: &JobConfig, result: &JobResult, recorder: Option<&Recorder>) -> RunReport {
    let (core_seconds, gb_seconds) = cost(&result.worker_lifetimes, config.threads, config.memory_gb);
    let ops_map = recorder.map(Recorder::ops).unwrap_or_default();
    let events = recorder.map(Recorder::events).unwrap_or_default();
    let per_step = msg_ops_per_worker_step(&ops_map);

    let mut msg = OpCounts::default();
    for (&(actor, _, ns), c) in &ops_map {
        if matches!(actor, Actor::Worker(_)) && ns == Namespace::Msg {
            msg.reads += c.reads;
            msg.writes += c.writes;
            msg.bytes_read += c.bytes_read;
            msg.bytes_written += c.bytes_written;
        }
    }

    // superstep s starts at the rollover from s - 1, or at worker start
    let mut starts: HashMap<u64, Duration> = HashMap::new();
    let mut worker_start: HashMap<u32, Duration> = HashMap::new();
    let mut busy = vec![0.0; result.num_workers as usize];
    let mut counted: HashMap<(u32, u64), ()> = HashMap::new();
    let (mut live, mut peak) = (0i64, 0i64);
    for e in &events {
        match (&e.kind, e.actor) {
            (EventKind::Rollover { from }, _) => {
                starts.insert(from + 1, e.at);
            }
            (EventKind::WorkerStarted, Actor::Worker(w)) => {
                worker_start.insert(w, e.at);
                live += 1;
                peak = peak.max(live);
            }
            (EventKind::WorkerExited { .. }, Actor::Worker(_)) => live -= 1,
            (EventKind::Decremented { superstep, .. }, Actor::Worker(w)) => {
                if counted.insert((w, *superstep), ()).is_none() {
                    let ws = worker_start.get(&w).copied().unwrap_or_default();
                    let st = starts.get(superstep).copied().unwrap_or_default().max(ws);
                    if let Some(b) = busy.get_mut(w as usize) {
                        *b += e.at.saturating_sub(st).as_secs_f64();
                    }
                }
            }
            _ => {}
        }
    }
    let partial = worker_start.is_empty();

    RunReport {
        config_hash: config_hash(config),
        algorithm: config.algorithm.clone(),
        partitions: config.partitions,
        max_worker: config.max_worker,
        threads: config.threads,
        mode: result.mode,
        workers: result.num_workers,
        supersteps: result.supersteps,
        wall_seconds: result.wall.as_secs_f64(),
        superstep_seconds: result.superstep_walls.iter().map(Duration::as_secs_f64).collect(),
        worker_lifetime_seconds: result.worker_lifetimes.iter().map(Duration::as_secs_f64).collect(),
        worker_busy_seconds: busy,
        core_seconds,
        gb_seconds,
        ops: ops_map
            .iter()
            .map(|(&(actor, superstep, ns), &counts)| OpRecord {
                actor,
                superstep,
                namespace: ns.as_str().to_string(),
                counts,
            })
            .collect(),
        msg_key_ops: msg.total(),
        message_bytes_out: msg.bytes_written,
        message_bytes_in: msg.bytes_read,
        max_msg_ops_per_worker_step: per_step.values().copied().max().unwrap_or(0),
        peak_concurrency: if partial { result.num_workers } else { peak as u32 },
        partial,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_arithmetic() {
        let (core, gb) = cost(&[Duration::from_secs(1)], 2, 2.0);
        assert_eq!((core, gb), (2.0, 2.0));
        let (core, gb) = cost(&[Duration::from_millis(500), Duration::from_millis(1500)], 3, 0.5);
        assert_eq!((core, gb), (6.0, 1.0));
    }

    #[test]
    fn per_step_counts_only_worker_messages() {
        let mut ops = BTreeMap::new();
        let c = OpCounts { reads: 2, writes: 1, bytes_read: 0, bytes_written: 0 };
        ops.insert((Actor::Worker(0), 1, Namespace::Msg), c);
        ops.insert((Actor::Worker(0), 1, Namespace::Result), c);
        ops.insert((Actor::Coordinator, 1, Namespace::Msg), c);
        let m = msg_ops_per_worker_step(&ops);
        assert_eq!(m.len(), 1);
        assert_eq!(m[&(0, 1)], 3);
    }
}
