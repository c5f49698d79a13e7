use std::marker::PhantomData;

use super::{Algorithm, Direction, VertexValue};
use crate::bitmap::SlotSet;
use crate::graph::VertexId;
use crate::partition::{Partition, Slot};

/// Mirror values of one partition: local outer index `i` lives at
/// `values[index[i]]`, which may be shared with co-located partitions.
#[derive(Debug, Clone, Copy)]
pub struct MirrorView<'a> {
    pub values: &'a [u64],
    pub index: &'a [u32],
}

impl MirrorView<'_> {
    pub const EMPTY: MirrorView<'static> = MirrorView { values: &[], index: &[] };
}

/// Everything one PEval/IncVal invocation may read.
#[derive(Debug, Clone, Copy)]
pub struct ComputeInput<'a> {
    pub part: &'a Partition,
    /// Committed inner values from the previous superstep.
    pub inner: &'a [u64],
    pub mirrors: MirrorView<'a>,
    /// `None` iterates every inner vertex.
    pub iteration: Option<&'a SlotSet>,
    pub superstep: u64,
    pub vertex_count: u64,
    /// Global aggregate summed over the previous superstep.
    pub aggregate: f64,
}

#[derive(Debug, Clone)]
pub struct ComputeOutput {
    pub next: Vec<u64>,
    /// Inner slots whose value differs from the committed one.
    pub changed: SlotSet,
    pub keep_computing: bool,
    pub aggregate: f64,
    pub computed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Vote {
    Default,
    Halt,
    Continue,
}

/// Untyped state behind [`Context`]. Reads see committed values only;
/// writes go to a separate buffer, so results do not depend on the order
/// vertices or partitions are visited.
#[derive(Debug)]
pub struct RawContext<'a> {
    input: ComputeInput<'a>,
    direction: Direction,
    next: Vec<u64>,
    vote: Vote,
    aggregate: f64,
}

impl<'a> RawContext<'a> {
    fn new(input: ComputeInput<'a>, direction: Direction) -> Self {
        RawContext { next: input.inner.to_vec(), input, direction, vote: Vote::Default, aggregate: 0.0 }
    }

    fn inner_count(&self) -> usize {
        self.input.inner.len()
    }

    fn get(&self, slot: Slot) -> u64 {
        let s = slot as usize;
        let n = self.inner_count();
        if s < n {
            self.input.inner[s]
        } else {
            let m = self.input.mirrors;
            m.values[m.index[s - n] as usize]
        }
    }

    fn set(&mut self, slot: Slot, word: u64) {
        assert!(
            (slot as usize) < self.inner_count(),
            "contract violation: set_value on non-inner slot {slot} of partition {}",
            self.input.part.id()
        );
        self.next[slot as usize] = word;
    }

    fn lists(&self, v: Slot, dir: Direction) -> (&[Slot], &[Slot]) {
        let p = self.input.part;
        match dir {
            Direction::Out => (p.out_neighbors(v), &[]),
            Direction::In => (p.in_neighbors(v), &[]),
            Direction::Both if p.is_directed() => (p.out_neighbors(v), p.in_neighbors(v)),
            Direction::Both => (p.out_neighbors(v), &[]),
        }
    }

    fn weight_lists(&self, v: Slot, dir: Direction) -> (Option<&[f64]>, Option<&[f64]>) {
        let p = self.input.part;
        let out = || p.out_adjacency().weights(v);
        let inn = || p.in_adjacency().weights(v);
        match dir {
            Direction::Out => (out(), None),
            Direction::In => (inn(), None),
            Direction::Both if p.is_directed() => (out(), inn()),
            Direction::Both => (out(), None),
        }
    }
}

/// Typed view handed to plugin procedures.
pub struct Context<'c, 'a, V> {
    raw: &'c mut RawContext<'a>,
    _value: PhantomData<V>,
}

impl<'c, 'a, V: VertexValue> Context<'c, 'a, V> {
    pub fn new(raw: &'c mut RawContext<'a>) -> Self {
        Context { raw, _value: PhantomData }
    }

    pub fn superstep(&self) -> u64 {
        self.raw.input.superstep
    }

    /// Total vertices in the graph.
    pub fn vertex_count(&self) -> u64 {
        self.raw.input.vertex_count
    }

    /// Inner slots to compute this superstep.
    pub fn vertices(&self) -> Vec<Slot> {
        match self.raw.input.iteration {
            Some(set) => set.iter().collect(),
            None => (0..self.raw.inner_count() as Slot).collect(),
        }
    }

    pub fn inner_slots(&self) -> std::ops::Range<Slot> {
        0..self.raw.inner_count() as Slot
    }

    pub fn is_inner(&self, slot: Slot) -> bool {
        (slot as usize) < self.raw.inner_count()
    }

    pub fn global_id(&self, slot: Slot) -> VertexId {
        self.raw.input.part.global_id(slot)
    }

    pub fn inner_slot_of(&self, global: VertexId) -> Option<Slot> {
        self.raw.input.part.inner_slot(global)
    }

    /// Value committed at the end of the previous superstep.
    pub fn get_value(&self, slot: Slot) -> V {
        V::from_word(self.raw.get(slot))
    }

    /// Value written so far in this superstep (inner slots only).
    pub fn new_value(&self, slot: Slot) -> V {
        V::from_word(self.raw.next[slot as usize])
    }

    /// Panics on a non-inner slot.
    pub fn set_value(&mut self, slot: Slot, value: V) {
        self.raw.set(slot, value.to_word())
    }

    /// Neighbors in the program's declared direction.
    pub fn edges(&self, v: Slot) -> impl Iterator<Item = Slot> + '_ {
        let (a, b) = self.raw.lists(v, self.raw.direction);
        a.iter().chain(b).copied()
    }

    /// Neighbors with edge weights (`None` on unweighted graphs).
    pub fn weighted_edges(&self, v: Slot) -> impl Iterator<Item = (Slot, Option<f64>)> + '_ {
        let (a, b) = self.raw.lists(v, self.raw.direction);
        let (wa, wb) = self.raw.weight_lists(v, self.raw.direction);
        let wa = (0..a.len()).map(move |i| wa.map(|w| w[i]));
        let wb = (0..b.len()).map(move |i| wb.map(|w| w[i]));
        a.iter().copied().zip(wa).chain(b.iter().copied().zip(wb))
    }

    /// Slots whose `edges` include `v`: the vertices that read `v`.
    pub fn readers(&self, v: Slot) -> impl Iterator<Item = Slot> + '_ {
        let (a, b) = self.raw.lists(v, self.raw.direction.reverse());
        a.iter().chain(b).copied()
    }

    pub fn out_degree(&self, v: Slot) -> usize {
        self.raw.input.part.out_degree(v)
    }

    /// Inner slots whose new value differs from the committed one.
    pub fn changed_vertices(&self) -> Vec<Slot> {
        (0..self.raw.inner_count())
            .filter(|&i| self.raw.next[i] != self.raw.input.inner[i])
            .map(|i| i as Slot)
            .collect()
    }

    /// Ends the job for this partition regardless of changes.
    pub fn vote_to_halt(&mut self) {
        self.raw.vote = Vote::Halt;
    }

    /// Requests another superstep even if nothing changed.
    pub fn keep_computing(&mut self) {
        self.raw.vote = Vote::Continue;
    }

    pub fn aggregate(&mut self, x: f64) {
        self.raw.aggregate += x;
    }

    pub fn aggregated(&self) -> f64 {
        self.raw.input.aggregate
    }
}

impl Context<'_, '_, u64> {
    /// Sets every inner vertex to its own global id.
    pub fn initialize_state_as_id(&mut self) {
        for s in 0..self.raw.inner_count() {
            self.raw.next[s] = self.raw.input.part.global_id(s as Slot);
        }
    }
}

/// Runs PEval (superstep 0) or IncVal on one partition.
///
/// The partition keeps computing when some inner value changed, unless the
/// plugin voted otherwise.
pub fn compute_partition(alg: &dyn Algorithm, input: ComputeInput<'_>) -> ComputeOutput {
    let computed = match input.iteration {
        Some(set) => set.count() as u64,
        None => input.inner.len() as u64,
    };
    let mut raw = RawContext::new(input, alg.direction());
    if input.superstep == 0 {
        alg.peval(&mut raw);
    } else {
        alg.incval(&mut raw);
    }
    let mut changed = SlotSet::new(input.inner.len() as u32);
    for (i, (a, b)) in raw.next.iter().zip(input.inner).enumerate() {
        if a != b {
            changed.set(i as u32);
        }
    }
    let keep_computing = match raw.vote {
        Vote::Default => !changed.is_empty(),
        Vote::Halt => false,
        Vote::Continue => true,
    };
    ComputeOutput { next: raw.next, changed, keep_computing, aggregate: raw.aggregate, computed }
}
