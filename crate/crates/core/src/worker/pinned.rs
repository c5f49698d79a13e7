//! Pinned mode: partitions stay resident for the whole job and only
//! messages move through the store.

use std::collections::BTreeSet;

use super::routing::{route_targets, Outbox};
use super::state::{encode_final, MirrorStore};
use super::{compute_all, Phase, WorkerEnv};
use crate::activation::{activation_applies, Dependents};
use crate::algorithms::{ComputeInput, MirrorView};
use crate::bitmap::{SlotSet, WorkerBitmap};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::job::{keys, pinned_worker};
use crate::maas::StorageKey;
use crate::metrics::EventKind;
use crate::partition::{Partition, PartitionId, Slot};
use crate::partitioner::load_partition;

struct Resident {
    part: Partition,
    inner: Vec<u64>,
    mirror_index: Vec<u32>,
    deps: Option<Dependents>,
    /// Slots (inner or mirror) that changed in the previous superstep.
    changed: SlotSet,
}

pub(super) fn run(env: &WorkerEnv<'_>) -> Result<()> {
    let cfg = &env.spec.config;
    let p = env.manifest.num_partitions;
    let w_count = env.spec.num_workers;
    let me = env.worker;
    let alg = env.alg.as_ref();

    let my_pids: Vec<PartitionId> = (0..p).filter(|&pid| pinned_worker(pid, w_count) == me).collect();
    let workers: Vec<WorkerBitmap> = (0..w_count)
        .map(|w| WorkerBitmap::from_ids(p, (0..p).filter(|&pid| pinned_worker(pid, w_count) == w)))
        .collect();

    let parts = my_pids
        .iter()
        .map(|&pid| load_partition(env.client, &env.manifest, pid))
        .collect::<Result<Vec<_>>>()?;
    let (mut mirrors, indexes) = {
        let refs: Vec<&Partition> = parts.iter().collect();
        MirrorStore::build(&refs, cfg.colocation_dedup, alg)
    };
    let unshared: usize = parts.iter().map(Partition::slot_count).sum();
    let mut residents: Vec<Resident> = parts
        .into_iter()
        .zip(indexes)
        .map(|(part, mirror_index)| Resident {
            inner: part.inner_ids().iter().map(|&v| alg.initial_value(v)).collect(),
            deps: env.activation_configured().then(|| Dependents::build(&part, alg.direction())),
            changed: SlotSet::new(part.slot_count() as u32),
            mirror_index,
            part,
        })
        .collect();
    let inner_total: usize = residents.iter().map(|r| r.part.inner_count()).sum();
    env.client.event(EventKind::ValueSlots {
        slots: (inner_total + mirrors.len()) as u64,
        unshared: unshared as u64,
    });

    // Mirrors owned by partitions on other workers, for per-vertex reads.
    let remote_mirrors: Vec<VertexId> = if cfg.key_aggregation {
        Vec::new()
    } else {
        let assignment = env.manifest.assignment()?;
        let mine: BTreeSet<VertexId> = residents.iter().flat_map(|r| r.part.inner_ids().to_vec()).collect();
        let mut v: Vec<VertexId> = mirrors.vertices().filter(|g| !mine.contains(g)).collect();
        v.retain(|&g| pinned_worker(assignment.owner(g), w_count) != me);
        v.sort_unstable();
        v
    };

    let mut s = 0u64;
    loop {
        match env.wait_phase(s)? {
            Phase::Abort => return Ok(()),
            Phase::Finish => return write_final(env, &residents, s.saturating_sub(1)),
            Phase::Compute => {}
        }
        env.client.set_superstep(s);
        let aggregate = if alg.uses_aggregate() && s > 0 { env.read_aggregate(s - 1)? } else { 0.0 };

        if s > 0 {
            let mut changed: Vec<SlotSet> = residents.iter_mut().map(|r| std::mem::replace(&mut r.changed, SlotSet::new(0))).collect();
            if cfg.key_aggregation {
                for j in (0..w_count).filter(|&j| j != me) {
                    let key = StorageKey::message(s - 1, j, me);
                    if let Some(block) = env.get_block(&key, s - 1, j, me)? {
                        for (gid, word) in block.entries {
                            if !mirrors.apply(gid, word, &mut changed) {
                                return Err(Error::Contract(format!("{key} updates vertex {gid} not mirrored here")));
                            }
                        }
                    }
                }
            } else {
                for &gid in &remote_mirrors {
                    if let Some(word) = env.get_vertex_message(s - 1, gid)? {
                        mirrors.apply(gid, word, &mut changed);
                    }
                }
            }
            for (r, c) in residents.iter_mut().zip(changed) {
                r.changed = c;
            }
        }

        let filter = activation_applies(cfg.activation_start, alg.supports_activation(), s);
        let sets: Vec<Option<SlotSet>> = residents
            .iter()
            .map(|r| {
                filter.then(|| {
                    r.deps.as_ref().expect("dependents built when activation is configured").iteration_set(r.part.inner_count(), r.changed.iter())
                })
            })
            .collect();
        let inputs: Vec<ComputeInput<'_>> = residents
            .iter()
            .zip(&sets)
            .map(|(r, set)| ComputeInput {
                part: &r.part,
                inner: &r.inner,
                mirrors: MirrorView { values: mirrors.values(), index: &r.mirror_index },
                iteration: set.as_ref(),
                superstep: s,
                vertex_count: env.spec.vertex_count,
                aggregate,
            })
            .collect();
        let outputs = compute_all(alg, inputs, env.threads(), me)?;

        // join: commit, update co-located mirrors, stage remote updates
        let mut outbox = Outbox::default();
        let mut keep = false;
        let mut next_changed: Vec<SlotSet> =
            residents.iter().map(|r| SlotSet::new(r.part.slot_count() as u32)).collect();
        for (idx, out) in outputs.into_iter().enumerate() {
            let r = &mut residents[idx];
            env.client.event(EventKind::Computed {
                superstep: s,
                pid: r.part.id(),
                vertices: out.computed,
                full: !filter,
            });
            keep |= out.keep_computing;
            if alg.uses_aggregate() {
                env.write_aggregate(s, r.part.id(), out.aggregate)?;
            }
            r.inner = out.next;
            for v in out.changed.iter() {
                next_changed[idx].set(v);
                let gid = r.part.global_id(v);
                let word = r.inner[v as usize];
                mirrors.apply(gid, word, &mut next_changed);
                for (w, _pid) in route_targets(r.part.adj_partitions(v), &workers, me, cfg.colocation_dedup)? {
                    outbox.stage(w, gid, word);
                }
            }
        }
        for (r, c) in residents.iter_mut().zip(next_changed) {
            r.changed = c;
        }

        env.client.event(EventKind::Staged { superstep: s, entries: outbox.staged() });
        if cfg.key_aggregation {
            for w in outbox.workers().collect::<Vec<_>>() {
                env.put_block(&StorageKey::message(s, me, w), s, w, outbox.entries(w))?;
            }
        } else {
            for (gid, word) in outbox.distinct() {
                env.put_vertex_message(s, gid, word)?;
            }
        }
        if keep {
            env.client.set_flag(&keys::keep_computing())?;
        }
        env.decrement(s, residents.len() as u32)?;
        s += 1;
    }
}

fn write_final(env: &WorkerEnv<'_>, residents: &[Resident], last: u64) -> Result<()> {
    env.client.set_superstep(last);
    let width = env.alg.output_kind().width();
    for r in residents {
        let words: Vec<u64> = (0..r.part.inner_count())
            .map(|v| env.alg.output(r.inner[v], r.part.out_degree(v as Slot)))
            .collect();
        env.client.put(&StorageKey::final_result(r.part.id()), &encode_final(&words, width))?;
        env.client.event(EventKind::FinalWritten { pid: r.part.id() });
    }
    env.decrement(last, residents.len() as u32)
}
