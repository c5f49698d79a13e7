//! Partition model: inner vertices in a contiguous slot range, read-only
//! mirrors (outer vertices) appended after them, and a CSR adjacency over
//! local slots.

use std::collections::BTreeSet;

use crate::bitmap::PartitionBitmap;
use crate::error::{Error, Result};
use crate::graph::{GlobalGraph, VertexId};

pub type PartitionId = u32;
/// Index into a partition's local value space: inner slots first, then
/// outer slots.
pub type Slot = u32;

/// Total owner map from vertex to partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    num_partitions: u32,
    owners: Vec<PartitionId>,
}

impl Assignment {
    pub fn new(num_partitions: u32, owners: Vec<PartitionId>) -> Result<Self> {
        if num_partitions == 0 {
            return Err(Error::Config("partition count must be at least 1".into()));
        }
        if let Some(bad) = owners.iter().find(|&&o| o >= num_partitions) {
            return Err(Error::Config(format!(
                "owner {bad} out of range for {num_partitions} partitions"
            )));
        }
        Ok(Assignment { num_partitions, owners })
    }

    /// Every vertex in partition 0.
    pub fn single(vertex_count: u64) -> Self {
        Assignment { num_partitions: 1, owners: vec![0; vertex_count as usize] }
    }

    pub fn num_partitions(&self) -> u32 {
        self.num_partitions
    }

    pub fn owner(&self, v: VertexId) -> PartitionId {
        self.owners[v as usize]
    }

    pub fn owners(&self) -> &[PartitionId] {
        &self.owners
    }

    pub fn vertex_count(&self) -> u64 {
        self.owners.len() as u64
    }

    /// Inner vertices of `pid`, ascending.
    pub fn members(&self, pid: PartitionId) -> Vec<VertexId> {
        self.owners
            .iter()
            .enumerate()
            .filter(|(_, &o)| o == pid)
            .map(|(v, _)| v as VertexId)
            .collect()
    }

    /// Inner vertices of `pid` as half-open id ranges.
    pub fn ranges(&self, pid: PartitionId) -> Vec<[u64; 2]> {
        id_ranges(&self.members(pid))
    }
}

/// Compresses an ascending id list into half-open ranges.
pub fn id_ranges(ids: &[VertexId]) -> Vec<[u64; 2]> {
    let mut out: Vec<[u64; 2]> = Vec::new();
    for &id in ids {
        match out.last_mut() {
            Some(r) if r[1] == id => r[1] += 1,
            _ => out.push([id, id + 1]),
        }
    }
    out
}

pub fn expand_ranges(ranges: &[[u64; 2]]) -> Vec<VertexId> {
    ranges.iter().flat_map(|r| r[0]..r[1]).collect()
}

/// CSR adjacency for the inner vertices of one partition. Targets are local
/// slots kept in ascending global-id order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalAdjacency {
    offsets: Vec<u32>,
    targets: Vec<Slot>,
    weights: Option<Vec<f64>>,
}

impl LocalAdjacency {
    fn with_capacity(inner: usize, weighted: bool) -> Self {
        let mut offsets = Vec::with_capacity(inner + 1);
        offsets.push(0);
        LocalAdjacency { offsets, targets: Vec::new(), weights: weighted.then(Vec::new) }
    }

    fn push_list(&mut self, targets: &[Slot], weights: Option<&[f64]>) {
        self.targets.extend_from_slice(targets);
        if let (Some(all), Some(w)) = (self.weights.as_mut(), weights) {
            all.extend_from_slice(w);
        }
        self.offsets.push(self.targets.len() as u32);
    }

    pub fn targets(&self, inner: Slot) -> &[Slot] {
        let (a, b) = (self.offsets[inner as usize], self.offsets[inner as usize + 1]);
        &self.targets[a as usize..b as usize]
    }

    pub fn weights(&self, inner: Slot) -> Option<&[f64]> {
        let (a, b) = (self.offsets[inner as usize], self.offsets[inner as usize + 1]);
        self.weights.as_ref().map(|w| &w[a as usize..b as usize])
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    id: PartitionId,
    num_partitions: u32,
    directed: bool,
    weighted: bool,
    inner_ids: Vec<VertexId>,
    outer_ids: Vec<VertexId>,
    out_adj: LocalAdjacency,
    /// Only materialized for directed graphs.
    in_adj: Option<LocalAdjacency>,
    adj_partitions: Vec<PartitionBitmap>,
}

/// Cuts partition `pid` out of the global graph.
///
/// Mirrors are the distinct neighbors (in either direction) of inner vertices
/// that live elsewhere; `adj_partitions[u]` has bit `j` set iff `u` has a
/// neighbor owned by partition `j != pid`.
pub fn remap_partition(global: &GlobalGraph, assignment: &Assignment, pid: PartitionId) -> Partition {
    assert_eq!(
        assignment.vertex_count(),
        global.vertex_count(),
        "assignment must cover every vertex"
    );
    let p = assignment.num_partitions();
    let inner_ids = assignment.members(pid);

    let mut outer = BTreeSet::new();
    let mut adj_partitions = Vec::with_capacity(inner_ids.len());
    for &u in &inner_ids {
        let mut bits = PartitionBitmap::new(p);
        for w in global.out_edges(u).iter().chain(global.in_edges(u)).map(|e| e.dst) {
            let owner = assignment.owner(w);
            if owner != pid {
                outer.insert(w);
                bits.set(owner);
            }
        }
        adj_partitions.push(bits);
    }
    let outer_ids: Vec<VertexId> = outer.into_iter().collect();

    let mut part = Partition {
        id: pid,
        num_partitions: p,
        directed: global.is_directed(),
        weighted: global.is_weighted(),
        inner_ids,
        outer_ids,
        out_adj: LocalAdjacency::default(),
        in_adj: None,
        adj_partitions,
    };
    let build = |part: &Partition, incoming: bool| {
        let mut adj = LocalAdjacency::with_capacity(part.inner_ids.len(), part.weighted);
        let mut slots = Vec::new();
        let mut weights = Vec::new();
        for &u in &part.inner_ids {
            let edges = if incoming { global.in_edges(u) } else { global.out_edges(u) };
            slots.clear();
            weights.clear();
            for e in edges {
                slots.push(part.local_slot(e.dst).expect("neighbor resolvable by construction"));
                weights.extend(e.weight);
            }
            adj.push_list(&slots, part.weighted.then_some(&weights[..]));
        }
        adj
    };
    part.out_adj = build(&part, false);
    if part.directed {
        part.in_adj = Some(build(&part, true));
    }
    part
}

/// Per-inner-vertex adjacency given in global ids, as decoded from a blob.
pub struct GlobalLists {
    pub ids: Vec<Vec<VertexId>>,
    pub weights: Option<Vec<Vec<f64>>>,
}

impl Partition {
    /// Reassembles a partition from decoded parts, checking that every edge
    /// endpoint resolves to a local slot.
    #[allow(clippy::too_many_arguments)]
    pub fn from_global_lists(
        id: PartitionId,
        num_partitions: u32,
        directed: bool,
        weighted: bool,
        inner_ids: Vec<VertexId>,
        outer_ids: Vec<VertexId>,
        out_lists: GlobalLists,
        in_lists: Option<GlobalLists>,
        adj_partitions: Vec<PartitionBitmap>,
    ) -> Result<Self> {
        if !inner_ids.windows(2).all(|w| w[0] < w[1]) || !outer_ids.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::codec("vertex id lists must be strictly ascending"));
        }
        if out_lists.ids.len() != inner_ids.len() || adj_partitions.len() != inner_ids.len() {
            return Err(Error::codec("per-vertex sections do not match inner count"));
        }
        if directed != in_lists.is_some() {
            return Err(Error::codec("in-adjacency present iff graph is directed"));
        }
        let mut part = Partition {
            id,
            num_partitions,
            directed,
            weighted,
            inner_ids,
            outer_ids,
            out_adj: LocalAdjacency::default(),
            in_adj: None,
            adj_partitions,
        };
        part.out_adj = part.localize(out_lists)?;
        if let Some(lists) = in_lists {
            part.in_adj = Some(part.localize(lists)?);
        }
        Ok(part)
    }

    fn localize(&self, lists: GlobalLists) -> Result<LocalAdjacency> {
        let mut adj = LocalAdjacency::with_capacity(self.inner_ids.len(), self.weighted);
        let mut slots = Vec::new();
        for (i, ids) in lists.ids.iter().enumerate() {
            slots.clear();
            for &g in ids {
                slots.push(self.local_slot(g).ok_or_else(|| {
                    Error::codec(format!("edge endpoint {g} has no local slot in partition {}", self.id))
                })?);
            }
            let w = lists.weights.as_ref().map(|w| &w[i][..]);
            adj.push_list(&slots, w);
        }
        Ok(adj)
    }

    pub fn id(&self) -> PartitionId {
        self.id
    }

    pub fn num_partitions(&self) -> u32 {
        self.num_partitions
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn inner_count(&self) -> usize {
        self.inner_ids.len()
    }

    pub fn outer_count(&self) -> usize {
        self.outer_ids.len()
    }

    pub fn slot_count(&self) -> usize {
        self.inner_ids.len() + self.outer_ids.len()
    }

    pub fn inner_ids(&self) -> &[VertexId] {
        &self.inner_ids
    }

    pub fn outer_ids(&self) -> &[VertexId] {
        &self.outer_ids
    }

    pub fn is_inner(&self, slot: Slot) -> bool {
        (slot as usize) < self.inner_ids.len()
    }

    pub fn global_id(&self, slot: Slot) -> VertexId {
        let s = slot as usize;
        if s < self.inner_ids.len() {
            self.inner_ids[s]
        } else {
            self.outer_ids[s - self.inner_ids.len()]
        }
    }

    pub fn local_slot(&self, global: VertexId) -> Option<Slot> {
        if let Ok(i) = self.inner_ids.binary_search(&global) {
            return Some(i as Slot);
        }
        self.outer_ids
            .binary_search(&global)
            .ok()
            .map(|i| (self.inner_ids.len() + i) as Slot)
    }

    pub fn inner_slot(&self, global: VertexId) -> Option<Slot> {
        self.inner_ids.binary_search(&global).ok().map(|i| i as Slot)
    }

    pub fn outer_slot(&self, global: VertexId) -> Option<Slot> {
        self.outer_ids
            .binary_search(&global)
            .ok()
            .map(|i| (self.inner_ids.len() + i) as Slot)
    }

    pub fn out_adjacency(&self) -> &LocalAdjacency {
        &self.out_adj
    }

    /// In-edges; the out-adjacency doubles as this on undirected graphs.
    pub fn in_adjacency(&self) -> &LocalAdjacency {
        self.in_adj.as_ref().unwrap_or(&self.out_adj)
    }

    pub fn out_neighbors(&self, inner: Slot) -> &[Slot] {
        self.out_adj.targets(inner)
    }

    pub fn in_neighbors(&self, inner: Slot) -> &[Slot] {
        self.in_adjacency().targets(inner)
    }

    pub fn out_degree(&self, inner: Slot) -> usize {
        self.out_adj.targets(inner).len()
    }

    pub fn adj_partitions(&self, inner: Slot) -> &PartitionBitmap {
        &self.adj_partitions[inner as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.len()
    }

    pub fn degree_sum(&self) -> usize {
        self.out_adj.len() + self.in_adj.as_ref().map_or(0, |a| a.len())
    }

    /// Out-adjacency of each inner vertex in global ids with weights.
    pub fn global_out_lists(&self) -> Vec<Vec<(VertexId, Option<f64>)>> {
        (0..self.inner_count() as Slot)
            .map(|u| {
                let w = self.out_adj.weights(u);
                self.out_adj
                    .targets(u)
                    .iter()
                    .enumerate()
                    .map(|(k, &s)| (self.global_id(s), w.map(|w| w[k])))
                    .collect()
            })
            .collect()
    }

    pub(crate) fn global_lists(&self, adj: &LocalAdjacency) -> GlobalLists {
        let n = self.inner_count() as Slot;
        GlobalLists {
            ids: (0..n).map(|u| adj.targets(u).iter().map(|&s| self.global_id(s)).collect()).collect(),
            weights: adj
                .weights
                .as_ref()
                .map(|_| (0..n).map(|u| adj.weights(u).unwrap_or(&[]).to_vec()).collect()),
        }
    }

    pub(crate) fn in_adj_raw(&self) -> Option<&LocalAdjacency> {
        self.in_adj.as_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_global_graph;

    fn path5() -> GlobalGraph {
        build_global_graph(5, &[(0u64, 1u64), (1, 2), (2, 3), (3, 4)], false, false).unwrap()
    }

    #[test]
    fn path_split_in_two() {
        let g = path5();
        let a = Assignment::new(2, vec![0, 0, 1, 1, 1]).unwrap();
        let p0 = remap_partition(&g, &a, 0);
        assert_eq!(p0.inner_ids(), &[0, 1]);
        assert_eq!(p0.outer_ids(), &[2]);
        assert!(p0.adj_partitions(0).is_empty());
        assert_eq!(p0.adj_partitions(1).iter().collect::<Vec<_>>(), vec![1]);
        assert_eq!(p0.out_neighbors(1), &[0, 2]);
        assert_eq!(p0.global_id(2), 2);

        let p1 = remap_partition(&g, &a, 1);
        assert_eq!(p1.inner_ids(), &[2, 3, 4]);
        assert_eq!(p1.outer_ids(), &[1]);
        assert_eq!(p1.local_slot(1), Some(3));
    }

    #[test]
    fn single_partition_has_no_mirrors() {
        let g = path5();
        let p = remap_partition(&g, &Assignment::single(5), 0);
        assert_eq!(p.outer_count(), 0);
        assert!((0..5).all(|u| p.adj_partitions(u).is_empty()));
    }

    #[test]
    fn directed_keeps_both_directions() {
        let g = build_global_graph(3, &[(0u64, 1u64), (2, 0)], true, false).unwrap();
        let a = Assignment::new(2, vec![0, 1, 1]).unwrap();
        let p0 = remap_partition(&g, &a, 0);
        assert_eq!(p0.outer_ids(), &[1, 2]);
        assert_eq!(p0.out_neighbors(0), &[1]);
        assert_eq!(p0.in_neighbors(0), &[2]);
        assert_eq!(p0.out_degree(0), 1);
    }

    #[test]
    fn ranges_compress_runs() {
        assert_eq!(id_ranges(&[0, 1, 2, 5, 7, 8]), vec![[0, 3], [5, 6], [7, 9]]);
        assert_eq!(expand_ranges(&[[0, 3], [5, 6]]), vec![0, 1, 2, 5]);
    }
}
