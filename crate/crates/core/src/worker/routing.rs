use std::collections::BTreeMap;

use crate::bitmap::{masked_intersection, PartitionBitmap, WorkerBitmap};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::partition::PartitionId;

/// Remote (worker, partition) targets for an update of a vertex whose
/// adjacent partitions are `bits`.
///
/// With dedup each remote worker gets one entry addressed to the lowest
/// adjacent partition it holds; without it every adjacent partition on a
/// remote worker gets its own entry.
pub fn route_targets(
    bits: &PartitionBitmap,
    workers: &[WorkerBitmap],
    self_worker: u32,
    dedup: bool,
) -> Result<Vec<(u32, PartitionId)>> {
    let mut out = Vec::new();
    if dedup {
        for (w, wb) in workers.iter().enumerate() {
            if w as u32 == self_worker {
                continue;
            }
            if let Some(rep) = masked_intersection(bits, wb)?.lowest() {
                out.push((w as u32, rep));
            }
        }
    } else {
        for pid in bits.iter() {
            let w = workers
                .iter()
                .position(|wb| wb.contains(pid))
                .ok_or_else(|| Error::Contract(format!("partition {pid} has no worker")))?;
            if w as u32 != self_worker {
                out.push((w as u32, pid));
            }
        }
    }
    Ok(out)
}

/// Pending updates per destination worker. Repeated updates of a vertex
/// collapse to the last value staged.
#[derive(Debug, Default)]
pub struct Outbox {
    blocks: BTreeMap<u32, BTreeMap<VertexId, u64>>,
    staged: u64,
}

impl Outbox {
    pub fn stage(&mut self, worker: u32, vertex: VertexId, word: u64) {
        self.blocks.entry(worker).or_default().insert(vertex, word);
        self.staged += 1;
    }

    /// Entries staged before collapsing.
    pub fn staged(&self) -> u64 {
        self.staged
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn entries(&self, worker: u32) -> Vec<(VertexId, u64)> {
        self.blocks.get(&worker).map(|b| b.iter().map(|(&v, &w)| (v, w)).collect()).unwrap_or_default()
    }

    pub fn workers(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.keys().copied()
    }

    /// Distinct vertices across all destinations with their last value.
    pub fn distinct(&self) -> BTreeMap<VertexId, u64> {
        let mut out = BTreeMap::new();
        for b in self.blocks.values() {
            out.extend(b.iter().map(|(&v, &w)| (v, w)));
        }
        out
    }
}
