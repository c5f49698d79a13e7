//! Rotating mode: workers claim partitions from the shared queue every
//! superstep, rebuild them from the previous partial result plus messages,
//! and persist them again.

use std::collections::{BTreeSet, HashMap};

use super::routing::Outbox;
use super::state::{decode_partial, encode_final, encode_partial, MirrorStore, PartialResult};
use super::{compute_all, Phase, WorkerEnv};
use crate::activation::{activation_applies, Dependents};
use crate::algorithms::{ComputeInput, MirrorView};
use crate::bitmap::SlotSet;
use crate::codec::BROADCAST;
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::job::keys;
use crate::maas::StorageKey;
use crate::metrics::EventKind;
use crate::partition::{Partition, PartitionId, Slot};
use crate::partitioner::load_partition;

struct Loaded {
    part: Partition,
    inner: Vec<u64>,
    mirrors: MirrorStore,
    mirror_index: Vec<u32>,
    changed: SlotSet,
}

/// Blob and partial result fetched ahead of the superstep they are for.
struct Preload {
    superstep: u64,
    pid: PartitionId,
    part: Partition,
    result: Vec<u8>,
}

pub(super) fn run(env: &WorkerEnv<'_>) -> Result<()> {
    let cfg = &env.spec.config;
    let me = env.worker;
    let alg = env.alg.as_ref();
    let width = env.width();
    let w_count = env.spec.num_workers;

    // own broadcast entries of the previous superstep, never re-read from the store
    let mut retained: HashMap<VertexId, u64> = HashMap::new();
    let mut retained_at = 0u64;
    let mut preload: Option<Preload> = None;
    let mut s = 0u64;
    loop {
        match env.wait_phase(s)? {
            Phase::Abort => return Ok(()),
            Phase::Finish => {
                if let Some(pre) = preload.take() {
                    env.client.event(EventKind::PreloadDropped { pid: pre.pid });
                }
                let last = env.client.counter(&keys::superstep())? as u64;
                return write_final(env, last);
            }
            Phase::Compute => {}
        }
        // a worker that lagged behind joins the current superstep
        s = s.max(env.client.counter(&keys::superstep())? as u64);
        env.client.set_superstep(s);
        let aggregate = if alg.uses_aggregate() && s > 0 { env.read_aggregate(s - 1)? } else { 0.0 };

        let mut incoming = std::mem::take(&mut retained);
        if retained_at + 1 != s {
            incoming.clear();
        }
        if s > 0 && cfg.key_aggregation {
            for j in (0..w_count).filter(|&j| j != me) {
                if let Some(block) = env.get_block(&StorageKey::broadcast(s - 1, j), s - 1, j, BROADCAST)? {
                    incoming.extend(block.entries);
                }
            }
        }

        let mut outbox = Outbox::default();
        let mut keep = false;
        let mut done: BTreeSet<PartitionId> = BTreeSet::new();
        let filter = activation_applies(cfg.activation_start, alg.supports_activation(), s);
        loop {
            let batch = claim_batch(env, s, &mut preload)?;
            if batch.is_empty() {
                break;
            }
            let mut loaded = Vec::with_capacity(batch.len());
            for (pid, pre) in batch {
                env.client.event(EventKind::Claimed { superstep: s, pid });
                loaded.push(load(env, s, pid, pre, &incoming)?);
            }
            let sets: Vec<Option<SlotSet>> = loaded
                .iter()
                .map(|l| {
                    filter.then(|| {
                        Dependents::build(&l.part, alg.direction()).iteration_set(l.part.inner_count(), l.changed.iter())
                    })
                })
                .collect();
            let inputs = loaded
                .iter()
                .zip(&sets)
                .map(|(l, set)| ComputeInput {
                    part: &l.part,
                    inner: &l.inner,
                    mirrors: MirrorView { values: l.mirrors.values(), index: &l.mirror_index },
                    iteration: set.as_ref(),
                    superstep: s,
                    vertex_count: env.spec.vertex_count,
                    aggregate,
                })
                .collect();
            let outputs = compute_all(alg, inputs, env.threads(), me)?;
            for (l, out) in loaded.into_iter().zip(outputs) {
                let pid = l.part.id();
                env.client.event(EventKind::Computed {
                    superstep: s,
                    pid,
                    vertices: out.computed,
                    full: !filter,
                });
                keep |= out.keep_computing;
                for v in out.changed.iter() {
                    if !l.part.adj_partitions(v).is_empty() {
                        outbox.stage(BROADCAST, l.part.global_id(v), out.next[v as usize]);
                    }
                }
                let partial = PartialResult { inner: out.next, outer: l.mirrors.values().to_vec(), changed: out.changed };
                env.client.put(&StorageKey::partial_result(s, pid), &encode_partial(&partial, width))?;
                if alg.uses_aggregate() {
                    env.write_aggregate(s, pid, out.aggregate)?;
                }
                done.insert(pid);
            }
        }

        env.client.event(EventKind::Staged { superstep: s, entries: outbox.staged() });
        let entries = outbox.entries(BROADCAST);
        if cfg.key_aggregation {
            if w_count > 1 && !entries.is_empty() {
                env.put_block(&StorageKey::broadcast(s, me), s, BROADCAST, entries.clone())?;
            }
            retained = entries.into_iter().collect();
            retained_at = s;
        } else {
            for (gid, word) in entries {
                env.put_vertex_message(s, gid, word)?;
            }
        }
        if keep {
            env.client.set_flag(&keys::keep_computing())?;
        }
        if !done.is_empty() {
            env.decrement(s, done.len() as u32)?;
        }
        if cfg.preload && w_count > 1 {
            preload = preload_next(env, s, &done)?;
        }
        s += 1;
    }
}

/// Claims up to `threads` partitions, trying a preloaded one first.
fn claim_batch(
    env: &WorkerEnv<'_>,
    s: u64,
    preload: &mut Option<Preload>,
) -> Result<Vec<(PartitionId, Option<Preload>)>> {
    let mut batch = Vec::new();
    if let Some(pre) = preload.take() {
        if pre.superstep == s && env.client.queue_remove(&keys::queue(s), pre.pid)? {
            env.client.event(EventKind::PreloadUsed { superstep: s, pid: pre.pid });
            batch.push((pre.pid, Some(pre)));
        } else {
            env.client.event(EventKind::PreloadDropped { pid: pre.pid });
        }
    }
    while batch.len() < env.threads() {
        match env.client.queue_pop(&keys::queue(s))? {
            Some(pid) => batch.push((pid, None)),
            None => break,
        }
    }
    Ok(batch)
}

/// Rebuilds partition state for superstep `s`.
fn load(
    env: &WorkerEnv<'_>,
    s: u64,
    pid: PartitionId,
    pre: Option<Preload>,
    incoming: &HashMap<VertexId, u64>,
) -> Result<Loaded> {
    let alg = env.alg.as_ref();
    let (part, result) = match pre {
        Some(p) => (p.part, Some(p.result)),
        None => {
            let part = load_partition(env.client, &env.manifest, pid)?;
            let result = if s > 0 { Some(env.client.get(&StorageKey::partial_result(s - 1, pid))?) } else { None };
            (part, result)
        }
    };
    let (mut mirrors, mut indexes) = MirrorStore::build(&[&part], true, alg);
    let mirror_index = indexes.pop().unwrap_or_default();
    let mut changed = vec![SlotSet::new(part.slot_count() as u32)];
    let inner = match result {
        None => part.inner_ids().iter().map(|&v| alg.initial_value(v)).collect(),
        Some(bytes) => {
            let r = decode_partial(&bytes, &part, env.width())?;
            for (i, &word) in r.outer.iter().enumerate() {
                mirrors.set_slot(mirror_index[i], word);
            }
            for v in r.changed.iter() {
                changed[0].set(v);
            }
            r.inner
        }
    };
    if s > 0 {
        for (i, &gid) in part.outer_ids().iter().enumerate() {
            let word = if env.spec.config.key_aggregation {
                incoming.get(&gid).copied()
            } else {
                env.get_vertex_message(s - 1, gid)?
            };
            if let Some(word) = word {
                mirrors.set_slot(mirror_index[i], word);
                changed[0].set((part.inner_count() + i) as Slot);
            }
        }
    }
    let changed = changed.pop().expect("one slot set");
    Ok(Loaded { part, inner, mirrors, mirror_index, changed })
}

/// While idle after superstep `s`, fetches the lowest-id partition another
/// worker has finished so it is ready if still unclaimed at `s + 1`.
fn preload_next(env: &WorkerEnv<'_>, s: u64, done: &BTreeSet<PartitionId>) -> Result<Option<Preload>> {
    let p = env.manifest.num_partitions;
    let candidates: Vec<PartitionId> = (0..p).filter(|pid| !done.contains(pid)).collect();
    if candidates.is_empty() {
        return Ok(None);
    }
    let found = env.client.wait_until(env.wait, "preload", || {
        if env.client.flag_set(&keys::finish())? || env.client.flag_set(&keys::abort())? {
            return Ok(Some(None));
        }
        if env.client.counter(&keys::superstep())? as u64 > s {
            return Ok(Some(None));
        }
        for &pid in &candidates {
            if env.client.exists(&StorageKey::partial_result(s, pid))? {
                return Ok(Some(Some(pid)));
            }
        }
        Ok(None)
    })?;
    let Some(pid) = found else { return Ok(None) };
    let part = load_partition(env.client, &env.manifest, pid)?;
    let result = env.client.get(&StorageKey::partial_result(s, pid))?;
    env.client.event(EventKind::Preloaded { superstep: s + 1, pid });
    Ok(Some(Preload { superstep: s + 1, pid, part, result }))
}

/// Converts the last partial results of claimed partitions to final output.
fn write_final(env: &WorkerEnv<'_>, last: u64) -> Result<()> {
    env.client.set_superstep(last);
    let width = env.width();
    let out_width = env.alg.output_kind().width();
    while let Some(pid) = env.client.queue_pop(&keys::final_queue())? {
        let part = load_partition(env.client, &env.manifest, pid)?;
        let bytes = env.client.get(&StorageKey::partial_result(last, pid)).map_err(|e| {
            Error::Worker { worker: env.worker, reason: format!("partition {pid} has no result for superstep {last}: {e}") }
        })?;
        let r = decode_partial(&bytes, &part, width)?;
        let words: Vec<u64> =
            (0..part.inner_count()).map(|v| env.alg.output(r.inner[v], part.out_degree(v as Slot))).collect();
        env.client.put(&StorageKey::final_result(pid), &encode_final(&words, out_width))?;
        env.client.event(EventKind::FinalWritten { pid });
        env.decrement(last, 1)?;
    }
    Ok(())
}
