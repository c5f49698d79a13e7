//! Reverse dependency index used to derive iteration sets from changes.

use crate::algorithms::Direction;
use crate::bitmap::SlotSet;
use crate::partition::{Partition, Slot};

/// For every local slot, the inner vertices whose edges (in the program's
/// direction) include it.
#[derive(Debug, Clone, Default)]
pub struct Dependents {
    offsets: Vec<u32>,
    targets: Vec<Slot>,
}

impl Dependents {
    pub fn build(part: &Partition, dir: Direction) -> Self {
        let n = part.slot_count();
        let mut counts = vec![0u32; n + 1];
        let lists = |v: Slot| -> (&[Slot], &[Slot]) {
            match dir {
                Direction::Out => (part.out_neighbors(v), &[]),
                Direction::In => (part.in_neighbors(v), &[]),
                Direction::Both if part.is_directed() => (part.out_neighbors(v), part.in_neighbors(v)),
                Direction::Both => (part.out_neighbors(v), &[]),
            }
        };
        for v in 0..part.inner_count() as Slot {
            let (a, b) = lists(v);
            for &u in a.iter().chain(b) {
                counts[u as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut targets = vec![0; counts[n] as usize];
        for v in 0..part.inner_count() as Slot {
            let (a, b) = lists(v);
            for &u in a.iter().chain(b) {
                targets[fill[u as usize] as usize] = v;
                fill[u as usize] += 1;
            }
        }
        Dependents { offsets: counts, targets }
    }

    pub fn of(&self, slot: Slot) -> &[Slot] {
        let s = slot as usize;
        &self.targets[self.offsets[s] as usize..self.offsets[s + 1] as usize]
    }

    /// Inner vertices to compute given the slots that changed in the
    /// previous superstep: the changed inner vertices and every dependent.
    pub fn iteration_set(&self, inner_count: usize, changed: impl IntoIterator<Item = Slot>) -> SlotSet {
        let mut set = SlotSet::new(inner_count as u32);
        for s in changed {
            if (s as usize) < inner_count {
                set.set(s);
            }
            for &d in self.of(s) {
                set.set(d);
            }
        }
        set
    }
}

/// Whether superstep `s` filters by activity.
pub fn activation_applies(start: Option<u64>, supported: bool, superstep: u64) -> bool {
    supported && superstep >= 1 && start.is_some_and(|a| superstep >= a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_global_graph;
    use crate::partition::{remap_partition, Assignment};

    #[test]
    fn dependents_follow_direction() {
        // 0 -> 1 -> 2, all in one partition
        let g = build_global_graph(3, &[(0u64, 1u64), (1, 2)], true, false).unwrap();
        let p = remap_partition(&g, &Assignment::single(3), 0);
        let pull = Dependents::build(&p, Direction::In);
        assert_eq!(pull.of(0), &[1]);
        assert_eq!(pull.of(2), &[] as &[Slot]);
        let set = pull.iteration_set(3, [0]);
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![0, 1]);
        let both = Dependents::build(&p, Direction::Both);
        assert_eq!(both.of(1), &[0, 2]);
    }

    #[test]
    fn activation_window() {
        assert!(!activation_applies(None, true, 5));
        assert!(!activation_applies(Some(0), true, 0));
        assert!(activation_applies(Some(0), true, 1));
        assert!(!activation_applies(Some(2), true, 1));
        assert!(!activation_applies(Some(0), false, 3));
    }
}
