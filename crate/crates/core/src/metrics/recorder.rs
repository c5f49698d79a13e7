//! Observation-only event and operation log shared by the coordinator and
//! in-process workers.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::maas::{Actor, Namespace, StorageKey};
use crate::partition::PartitionId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub reads: u64,
    pub writes: u64,
    pub bytes_read: u64,
    pub bytes_written: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.reads + self.writes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    Read,
    Write,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    WorkerStarted,
    WorkerExited { ok: bool },
    Claimed { superstep: u64, pid: PartitionId },
    /// `vertices` counts the iteration set handed to the plugin.
    Computed { superstep: u64, pid: PartitionId, vertices: u64, full: bool },
    /// Outbox entries staged before worker-level collapsing.
    Staged { superstep: u64, entries: u64 },
    /// Resident value slots versus what the same partitions would hold
    /// without mirror sharing.
    ValueSlots { slots: u64, unshared: u64 },
    Preloaded { superstep: u64, pid: PartitionId },
    PreloadUsed { superstep: u64, pid: PartitionId },
    PreloadDropped { pid: PartitionId },
    Decremented { superstep: u64, count: u32, remaining: i64 },
    BarrierPassed { superstep: u64 },
    Rollover { from: u64 },
    Finished { superstep: u64 },
    FinalWritten { pid: PartitionId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at: Duration,
    pub actor: Actor,
    pub kind: EventKind,
}

#[derive(Debug, Default)]
struct Epochs {
    rolled: BTreeSet<u64>,
    violations: Vec<String>,
}

#[derive(Debug)]
pub struct Recorder {
    start: Instant,
    seq: AtomicU64,
    ops: Mutex<BTreeMap<(Actor, u64, Namespace), OpCounts>>,
    events: Mutex<Vec<Event>>,
    epochs: Mutex<Epochs>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Default for Recorder {
    fn default() -> Self {
        Self::new()
    }
}

impl Recorder {
    pub fn new() -> Self {
        Recorder {
            start: Instant::now(),
            seq: AtomicU64::new(0),
            ops: Mutex::default(),
            events: Mutex::default(),
            epochs: Mutex::default(),
        }
    }

    pub fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }

    pub fn record_op(&self, actor: Actor, superstep: u64, key: &StorageKey, kind: OpKind, bytes: usize) {
        if key.namespace() == Namespace::Msg {
            self.check_epoch(actor, key, kind);
        }
        let mut ops = lock(&self.ops);
        let c = ops.entry((actor, superstep, key.namespace())).or_default();
        match kind {
            OpKind::Read => {
                c.reads += 1;
                c.bytes_read += bytes as u64;
            }
            OpKind::Write => {
                c.writes += 1;
                c.bytes_written += bytes as u64;
            }
        }
    }

    /// A superstep-k message may be read only after the k -> k+1 rollover and
    /// written only before it.
    fn check_epoch(&self, actor: Actor, key: &StorageKey, kind: OpKind) {
        let Some(k) = key.superstep() else { return };
        let mut ep = lock(&self.epochs);
        let rolled = ep.rolled.contains(&k);
        let bad = match kind {
            OpKind::Read => !rolled,
            OpKind::Write => rolled,
        };
        if bad {
            let what = if kind == OpKind::Read { "read before" } else { "written after" };
            ep.violations.push(format!("{actor} {} {what} rollover {k}->{}", key.render(), k + 1));
        }
    }

    /// Must be called before the superstep counter is incremented so that no
    /// reader can observe the new superstep ahead of the record.
    pub fn record_rollover(&self, actor: Actor, from: u64) {
        lock(&self.epochs).rolled.insert(from);
        self.event(actor, EventKind::Rollover { from });
    }

    pub fn event(&self, actor: Actor, kind: EventKind) {
        let mut events = lock(&self.events);
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        events.push(Event { seq, at: self.start.elapsed(), actor, kind });
    }

    pub fn events(&self) -> Vec<Event> {
        lock(&self.events).clone()
    }

    pub fn ops(&self) -> BTreeMap<(Actor, u64, Namespace), OpCounts> {
        lock(&self.ops).clone()
    }

    pub fn epoch_violations(&self) -> Vec<String> {
        lock(&self.epochs).violations.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_check_flags_early_reads_and_late_writes() {
        let r = Recorder::new();
        let w = Actor::Worker(0);
        r.record_op(w, 0, &StorageKey::message(0, 1, 0), OpKind::Write, 4);
        r.record_op(w, 0, &StorageKey::message(0, 1, 0), OpKind::Read, 4);
        r.record_rollover(Actor::Coordinator, 0);
        r.record_op(w, 1, &StorageKey::message(0, 1, 0), OpKind::Read, 4);
        r.record_op(w, 1, &StorageKey::message(0, 1, 0), OpKind::Write, 4);
        let v = r.epoch_violations();
        assert_eq!(v.len(), 2, "{v:?}");
        assert!(v[0].contains("read before"));
        assert!(v[1].contains("written after"));
        let ops = r.ops();
        let c = ops[&(w, 0, Namespace::Msg)];
        assert_eq!((c.reads, c.writes, c.bytes_read), (1, 1, 4));
    }
}
