//! Storage abstraction through which workers and the coordinator share all
//! state: partitions, messages, partial results and control metadata.

mod client;
mod file;
mod memory;

use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use client::{Actor, MaasClient};
pub use file::FileStore;
pub use memory::MemStore;

use crate::error::{Error, Result};
use crate::graph::VertexId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Namespace {
    Part,
    Msg,
    Result,
    Ctl,
}

impl Namespace {
    pub const ALL: [Namespace; 4] = [Namespace::Part, Namespace::Msg, Namespace::Result, Namespace::Ctl];

    pub fn as_str(self) -> &'static str {
        match self {
            Namespace::Part => "part",
            Namespace::Msg => "msg",
            Namespace::Result => "result",
            Namespace::Ctl => "ctl",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Namespace::ALL.into_iter().find(|ns| ns.as_str() == s)
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Namespaced key rendered as `ns/c1/c2/...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StorageKey {
    ns: Namespace,
    components: Vec<String>,
}

impl StorageKey {
    pub fn new<I, S>(ns: Namespace, components: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        StorageKey { ns, components: components.into_iter().map(|c| c.to_string()).collect() }
    }

    pub fn partition(pid: u32) -> Self {
        Self::new(Namespace::Part, [pid])
    }

    pub fn manifest() -> Self {
        Self::new(Namespace::Part, ["manifest"])
    }

    pub fn id_map() -> Self {
        Self::new(Namespace::Part, ["idmap"])
    }

    /// Aggregated block from `src` to `dst` written in `superstep`.
    pub fn message(superstep: u64, src: u32, dst: u32) -> Self {
        Self::new(Namespace::Msg, [superstep.to_string(), src.to_string(), dst.to_string()])
    }

    /// Rotating-mode block from `src` readable by every other worker.
    pub fn broadcast(superstep: u64, src: u32) -> Self {
        Self::new(Namespace::Msg, [superstep.to_string(), src.to_string(), "all".to_string()])
    }

    /// Per-vertex key used when key aggregation is disabled.
    pub fn vertex_message(superstep: u64, v: VertexId) -> Self {
        Self::new(Namespace::Msg, [superstep.to_string(), "v".to_string(), v.to_string()])
    }

    pub fn partial_result(superstep: u64, pid: u32) -> Self {
        Self::new(Namespace::Result, [superstep.to_string(), pid.to_string()])
    }

    pub fn final_result(pid: u32) -> Self {
        Self::new(Namespace::Result, ["final".to_string(), pid.to_string()])
    }

    pub fn ctl(name: &str) -> Self {
        Self::new(Namespace::Ctl, [name])
    }

    pub fn aggregate(superstep: u64, worker: u32) -> Self {
        Self::new(Namespace::Ctl, ["agg".to_string(), superstep.to_string(), worker.to_string()])
    }

    pub fn worker_error(worker: u32) -> Self {
        Self::new(Namespace::Ctl, ["error".to_string(), worker.to_string()])
    }

    pub fn namespace(&self) -> Namespace {
        self.ns
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    /// Superstep embedded in `msg/` and `result/` keys.
    pub fn superstep(&self) -> Option<u64> {
        match self.ns {
            Namespace::Msg | Namespace::Result => self.components.first()?.parse().ok(),
            _ => None,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::from(self.ns.as_str());
        for c in &self.components {
            s.push('/');
            s.push_str(c);
        }
        s
    }

    pub fn parse(s: &str) -> Result<Self> {
        let mut it = s.split('/');
        let ns = it
            .next()
            .and_then(Namespace::parse)
            .ok_or_else(|| Error::Storage(format!("malformed key `{s}`")))?;
        let components: Vec<String> = it.map(str::to_string).collect();
        if components.is_empty() || components.iter().any(|c| !valid_component(c)) {
            return Err(Error::Storage(format!("malformed key `{s}`")));
        }
        Ok(StorageKey { ns, components })
    }
}

fn valid_component(c: &str) -> bool {
    !c.is_empty() && c != "." && c != ".." && c.bytes().all(|b| b.is_ascii_alphanumeric() || b"_-.".contains(&b))
}

impl fmt::Display for StorageKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Backend operations. Implementations must be linearizable for counters,
/// flags and queues under concurrent callers.
pub trait Maas: Send + Sync + fmt::Debug {
    fn put(&self, key: &StorageKey, value: &[u8]) -> Result<()>;
    /// Absent keys yield [`Error::NotFound`], distinct from an empty value.
    fn get(&self, key: &StorageKey) -> Result<Vec<u8>>;
    fn exists(&self, key: &StorageKey) -> Result<bool>;
    fn delete(&self, key: &StorageKey) -> Result<()>;

    fn init_counter(&self, key: &StorageKey, value: i64) -> Result<()>;
    /// Adds `delta` and returns the updated value.
    fn atomic_add(&self, key: &StorageKey, delta: i64) -> Result<i64>;

    fn set_flag(&self, key: &StorageKey) -> Result<()>;
    fn clear_flag(&self, key: &StorageKey) -> Result<()>;
    fn flag_set(&self, key: &StorageKey) -> Result<bool>;

    fn queue_init(&self, key: &StorageKey, items: &[u32]) -> Result<()>;
    /// Pops the front item; `None` once the queue is drained.
    fn queue_pop(&self, key: &StorageKey) -> Result<Option<u32>>;
    /// Removes `item` if still queued, reporting whether it was.
    fn queue_remove(&self, key: &StorageKey, item: u32) -> Result<bool>;
    fn queue_len(&self, key: &StorageKey) -> Result<usize>;

    /// Drops every key in a namespace.
    fn clear_namespace(&self, ns: Namespace) -> Result<()>;

    /// Monotone change counter for [`wait_for_change`](Self::wait_for_change).
    /// Backends without change notification return 0.
    fn version(&self) -> u64 {
        0
    }

    /// Blocks until the store changed after `seen` or `timeout` elapsed.
    /// The default sleeps for the whole timeout.
    fn wait_for_change(&self, _seen: u64, timeout: Duration) {
        std::thread::sleep(timeout);
    }

    fn default_poll_interval(&self) -> Duration;
}

/// Backend selector from a `mem://` or `file://<dir>` URI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaasUri {
    Memory(String),
    File(std::path::PathBuf),
}

impl MaasUri {
    pub fn parse(uri: &str) -> Result<Self> {
        if let Some(name) = uri.strip_prefix("mem://") {
            Ok(MaasUri::Memory(name.to_string()))
        } else if let Some(dir) = uri.strip_prefix("file://") {
            if dir.is_empty() {
                return Err(Error::Config("file:// URI needs a directory".into()));
            }
            Ok(MaasUri::File(dir.into()))
        } else {
            Err(Error::Config(format!("unsupported MaaS URI `{uri}` (expected mem:// or file://<dir>)")))
        }
    }
}

/// Opens a backend. Each `mem://` open creates a fresh private store; callers
/// that need to share one keep the returned handle.
pub fn open(uri: &str) -> Result<Arc<dyn Maas>> {
    match MaasUri::parse(uri)? {
        MaasUri::Memory(_) => Ok(Arc::new(MemStore::new())),
        MaasUri::File(dir) => Ok(Arc::new(FileStore::open(dir)?)),
    }
}
