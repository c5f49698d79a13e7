use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{Maas, Namespace, StorageKey};
use crate::error::{Error, Result};
use crate::metrics::{EventKind, OpKind, Recorder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Actor {
    Coordinator,
    Worker(u32),
    Tool,
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Coordinator => f.write_str("coordinator"),
            Actor::Worker(k) => write!(f, "worker {k}"),
            Actor::Tool => f.write_str("tool"),
        }
    }
}

/// Store handle bound to one actor. Every operation is attributed to the
/// actor and its current superstep when a recorder is attached.
pub struct MaasClient {
    store: Arc<dyn Maas>,
    recorder: Option<Arc<Recorder>>,
    actor: Actor,
    superstep: AtomicU64,
    poll: Duration,
}

impl fmt::Debug for MaasClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MaasClient")
            .field("store", &self.store)
            .field("actor", &self.actor)
            .field("superstep", &self.superstep())
            .finish()
    }
}

impl MaasClient {
    pub fn new(store: Arc<dyn Maas>, recorder: Option<Arc<Recorder>>, actor: Actor) -> Self {
        let poll = store.default_poll_interval();
        MaasClient { store, recorder, actor, superstep: AtomicU64::new(0), poll }
    }

    pub fn for_actor(&self, actor: Actor) -> Self {
        MaasClient {
            store: self.store.clone(),
            recorder: self.recorder.clone(),
            actor,
            superstep: AtomicU64::new(0),
            poll: self.poll,
        }
    }

    pub fn with_poll_interval(mut self, poll: Duration) -> Self {
        self.poll = poll;
        self
    }

    pub fn store(&self) -> &Arc<dyn Maas> {
        &self.store
    }

    pub fn recorder(&self) -> Option<&Arc<Recorder>> {
        self.recorder.as_ref()
    }

    pub fn actor(&self) -> Actor {
        self.actor
    }

    pub fn superstep(&self) -> u64 {
        self.superstep.load(Ordering::Relaxed)
    }

    pub fn set_superstep(&self, s: u64) {
        self.superstep.store(s, Ordering::Relaxed);
    }

    pub fn poll_interval(&self) -> Duration {
        self.poll
    }

    fn count(&self, key: &StorageKey, kind: OpKind, bytes: usize) {
        if let Some(r) = &self.recorder {
            r.record_op(self.actor, self.superstep(), key, kind, bytes);
        }
    }

    pub fn event(&self, kind: EventKind) {
        if let Some(r) = &self.recorder {
            r.event(self.actor, kind);
        }
    }

    pub fn put(&self, key: &StorageKey, value: &[u8]) -> Result<()> {
        self.count(key, OpKind::Write, value.len());
        self.store.put(key, value)
    }

    pub fn get(&self, key: &StorageKey) -> Result<Vec<u8>> {
        let r = self.store.get(key);
        self.count(key, OpKind::Read, r.as_ref().map_or(0, Vec::len));
        r
    }

    /// Like [`get`](Self::get) with absence mapped to `None`.
    pub fn get_opt(&self, key: &StorageKey) -> Result<Option<Vec<u8>>> {
        match self.get(key) {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.is_not_found() => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn exists(&self, key: &StorageKey) -> Result<bool> {
        self.count(key, OpKind::Read, 0);
        self.store.exists(key)
    }

    pub fn delete(&self, key: &StorageKey) -> Result<()> {
        self.count(key, OpKind::Write, 0);
        self.store.delete(key)
    }

    pub fn init_counter(&self, key: &StorageKey, value: i64) -> Result<()> {
        self.count(key, OpKind::Write, 0);
        self.store.init_counter(key, value)
    }

    pub fn atomic_add(&self, key: &StorageKey, delta: i64) -> Result<i64> {
        self.count(key, if delta == 0 { OpKind::Read } else { OpKind::Write }, 0);
        self.store.atomic_add(key, delta)
    }

    pub fn counter(&self, key: &StorageKey) -> Result<i64> {
        self.atomic_add(key, 0)
    }

    pub fn set_flag(&self, key: &StorageKey) -> Result<()> {
        self.count(key, OpKind::Write, 0);
        self.store.set_flag(key)
    }

    pub fn clear_flag(&self, key: &StorageKey) -> Result<()> {
        self.count(key, OpKind::Write, 0);
        self.store.clear_flag(key)
    }

    pub fn flag_set(&self, key: &StorageKey) -> Result<bool> {
        self.count(key, OpKind::Read, 0);
        self.store.flag_set(key)
    }

    pub fn queue_init(&self, key: &StorageKey, items: &[u32]) -> Result<()> {
        self.count(key, OpKind::Write, 0);
        self.store.queue_init(key, items)
    }

    pub fn queue_pop(&self, key: &StorageKey) -> Result<Option<u32>> {
        self.count(key, OpKind::Write, 0);
        self.store.queue_pop(key)
    }

    pub fn queue_remove(&self, key: &StorageKey, item: u32) -> Result<bool> {
        self.count(key, OpKind::Write, 0);
        self.store.queue_remove(key, item)
    }

    pub fn queue_len(&self, key: &StorageKey) -> Result<usize> {
        self.count(key, OpKind::Read, 0);
        self.store.queue_len(key)
    }

    pub fn clear_namespace(&self, ns: Namespace) -> Result<()> {
        self.store.clear_namespace(ns)
    }

    /// Polls `probe` until it yields a value, waking on store changes where
    /// the backend supports it. Fails once `timeout` elapses.
    pub fn wait_until<T>(
        &self,
        timeout: Duration,
        what: &str,
        mut probe: impl FnMut() -> Result<Option<T>>,
    ) -> Result<T> {
        let deadline = Instant::now() + timeout;
        loop {
            let seen = self.store.version();
            if let Some(v) = probe()? {
                return Ok(v);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(Error::Storage(format!("{} timed out waiting for {what}", self.actor)));
            }
            self.store.wait_for_change(seen, self.poll.min(deadline - now));
        }
    }
}
