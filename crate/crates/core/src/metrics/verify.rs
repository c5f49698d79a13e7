use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::harness::run_local;
use crate::algorithms::{Registry, ValueKind};
use crate::codec::{decode_message_block, encode_message_block, Identity};
use crate::error::Result;
use crate::graph::{GlobalGraph, VertexId};
use crate::job::JobConfig;
use crate::maas::{Maas, Namespace, StorageKey};
use crate::simulator::simulate;

/// Relative tolerance for floating-point outputs.
pub const FLOAT_RTOL: f64 = 1e-6;

pub fn values_match(kind: ValueKind, a: u64, b: u64) -> bool {
    if !kind.is_float() {
        return a == b;
    }
    let (x, y) = (kind.to_f64(a), kind.to_f64(b));
    (x - y).abs() <= FLOAT_RTOL * x.abs().max(y.abs()).max(1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub vertex: VertexId,
    pub engine: String,
    pub oracle: String,
}

pub fn compare(kind: ValueKind, engine: &[u64], oracle: &[u64]) -> Vec<Divergence> {
    let mut out: Vec<Divergence> = engine
        .iter()
        .zip(oracle)
        .enumerate()
        .filter(|(_, (&a, &b))| !values_match(kind, a, b))
        .map(|(v, (&a, &b))| Divergence { vertex: v as VertexId, engine: kind.render(a), oracle: kind.render(b) })
        .collect();
    if engine.len() != oracle.len() {
        out.push(Divergence {
            vertex: engine.len().min(oracle.len()) as VertexId,
            engine: format!("{} values", engine.len()),
            oracle: format!("{} values", oracle.len()),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub passed: bool,
    pub compared: usize,
    pub engine_supersteps: u64,
    pub oracle_supersteps: u64,
    pub divergences: Vec<Divergence>,
}

impl VerifyOutcome {
    pub fn first(&self) -> Option<&Divergence> {
        self.divergences.first()
    }

    /// Human-readable diff, at most `limit` vertex lines.
    pub fn diff_text(&self, limit: usize) -> String {
        let mut s = String::new();
        if self.engine_supersteps != self.oracle_supersteps {
            s += &format!("supersteps: engine {} oracle {}\n", self.engine_supersteps, self.oracle_supersteps);
        }
        for d in self.divergences.iter().take(limit) {
            s += &format!("vertex {}: engine {} oracle {}\n", d.vertex, d.engine, d.oracle);
        }
        if self.divergences.len() > limit {
            s += &format!("... {} more\n", self.divergences.len() - limit);
        }
        s
    }
}

/// Runs the engine and the sequential simulator on `graph` and compares
/// every vertex and the superstep count.
pub fn verify(
    graph: &GlobalGraph,
    config: &JobConfig,
    store: Arc<dyn Maas>,
    registry: Arc<Registry>,
) -> Result<VerifyOutcome> {
    let alg = registry.build(&config.algorithm, &config.params)?;
    let run = run_local(graph, config, store, registry)?;
    let sim = simulate(graph, alg.as_ref(), config.activation_start);
    let divergences = compare(sim.kind, &run.result.values, &sim.values);
    Ok(VerifyOutcome {
        passed: divergences.is_empty() && run.result.supersteps == sim.supersteps,
        compared: sim.values.len(),
        engine_supersteps: run.result.supersteps,
        oracle_supersteps: sim.supersteps,
        divergences,
    })
}

/// Test hook: a store that zeroes one nonzero value in the first message
/// write carrying one. Aggregated blocks must use the identity codec.
/// Rotating workers may consume their own retained copy instead of the
/// stored block, so only pinned jobs fail deterministically.
#[derive(Debug)]
pub struct CorruptingStore {
    inner: Arc<dyn Maas>,
    hit: Mutex<Option<String>>,
}

impl CorruptingStore {
    pub fn new(inner: Arc<dyn Maas>) -> Self {
        CorruptingStore { inner, hit: Mutex::new(None) }
    }

    /// Key of the corrupted object, once one was written.
    pub fn corrupted(&self) -> Option<String> {
        self.hit.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn corrupt(&self, key: &StorageKey, value: &[u8]) -> Option<Vec<u8>> {
        if key.components().get(1).is_some_and(|c| c == "v") {
            // per-vertex message: raw value bytes
            return value.iter().any(|&b| b != 0).then(|| vec![0; value.len()]);
        }
        for width in [8u8, 4] {
            if let Ok(mut block) = decode_message_block(value, width, &Identity) {
                let e = block.entries.iter_mut().find(|e| e.1 != 0)?;
                e.1 = 0;
                return encode_message_block(&block, &Identity).ok();
            }
        }
        None
    }
}

impl Maas for CorruptingStore {
    fn put(&self, key: &StorageKey, value: &[u8]) -> Result<()> {
        if key.namespace() == Namespace::Msg {
            let mut hit = self.hit.lock().unwrap_or_else(|e| e.into_inner());
            if hit.is_none() {
                if let Some(bad) = self.corrupt(key, value) {
                    *hit = Some(key.render());
                    return self.inner.put(key, &bad);
                }
            }
        }
        self.inner.put(key, value)
    }

    fn get(&self, key: &StorageKey) -> Result<Vec<u8>> {
        self.inner.get(key)
    }

    fn exists(&self, key: &StorageKey) -> Result<bool> {
        self.inner.exists(key)
    }

    fn delete(&self, key: &StorageKey) -> Result<()> {
        self.inner.delete(key)
    }

    fn init_counter(&self, key: &StorageKey, value: i64) -> Result<()> {
        self.inner.init_counter(key, value)
    }

    fn atomic_add(&self, key: &StorageKey, delta: i64) -> Result<i64> {
        self.inner.atomic_add(key, delta)
    }

    fn set_flag(&self, key: &StorageKey) -> Result<()> {
        self.inner.set_flag(key)
    }

    fn clear_flag(&self, key: &StorageKey) -> Result<()> {
        self.inner.clear_flag(key)
    }

    fn flag_set(&self, key: &StorageKey) -> Result<bool> {
        self.inner.flag_set(key)
    }

    fn queue_init(&self, key: &StorageKey, items: &[u32]) -> Result<()> {
        self.inner.queue_init(key, items)
    }

    fn queue_pop(&self, key: &StorageKey) -> Result<Option<u32>> {
        self.inner.queue_pop(key)
    }

    fn queue_remove(&self, key: &StorageKey, item: u32) -> Result<bool> {
        self.inner.queue_remove(key, item)
    }

    fn queue_len(&self, key: &StorageKey) -> Result<usize> {
        self.inner.queue_len(key)
    }

    fn clear_namespace(&self, ns: Namespace) -> Result<()> {
        self.inner.clear_namespace(ns)
    }

    fn version(&self) -> u64 {
        self.inner.version()
    }

    fn wait_for_change(&self, seen: u64, timeout: Duration) {
        self.inner.wait_for_change(seen, timeout)
    }

    fn default_poll_interval(&self) -> Duration {
        self.inner.default_poll_interval()
    }
}
