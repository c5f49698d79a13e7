//! Single-threaded BSP reference: the whole graph as one partition, run
//! through the same plugin code as the engine.

use crate::activation::{activation_applies, Dependents};
use crate::algorithms::{compute_partition, Algorithm, ComputeInput, MirrorView, ValueKind};
use crate::graph::GlobalGraph;
use crate::partition::{remap_partition, Assignment, Slot};

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Output words indexed by vertex id.
    pub values: Vec<u64>,
    pub kind: ValueKind,
    pub supersteps: u64,
    /// Vertices handed to the plugin in each superstep.
    pub computed: Vec<u64>,
}

pub const DEFAULT_CAP: u64 = 10_000;

pub fn simulate(graph: &GlobalGraph, alg: &dyn Algorithm, activation_start: Option<u64>) -> SimResult {
    let part = remap_partition(graph, &Assignment::single(graph.vertex_count()), 0);
    let cap = alg.max_supersteps().map_or(DEFAULT_CAP, |m| m.min(DEFAULT_CAP));
    let deps = activation_start.is_some().then(|| Dependents::build(&part, alg.direction()));
    let mut values: Vec<u64> = part.inner_ids().iter().map(|&v| alg.initial_value(v)).collect();
    let mut changed: Vec<Slot> = Vec::new();
    let mut aggregate = 0.0;
    let mut computed = Vec::new();
    let mut s = 0u64;
    loop {
        let filter = activation_applies(activation_start, alg.supports_activation(), s);
        let set = match (&deps, filter) {
            (Some(d), true) => Some(d.iteration_set(part.inner_count(), changed.iter().copied())),
            _ => None,
        };
        let out = compute_partition(
            alg,
            ComputeInput {
                part: &part,
                inner: &values,
                mirrors: MirrorView::EMPTY,
                iteration: set.as_ref(),
                superstep: s,
                vertex_count: graph.vertex_count(),
                aggregate,
            },
        );
        computed.push(out.computed);
        values = out.next;
        changed = out.changed.iter().collect();
        aggregate = out.aggregate;
        if !out.keep_computing || s + 1 >= cap {
            break;
        }
        s += 1;
    }
    // a single partition holds the vertices in id order
    let values = (0..part.inner_count()).map(|v| alg.output(values[v], part.out_degree(v as Slot))).collect();
    SimResult { values, kind: alg.output_kind(), supersteps: s + 1, computed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{Bfs, Cdlp, PageRank, Wcc};
    use crate::graph::build_global_graph;

    #[test]
    fn bfs_on_path() {
        let g = build_global_graph(3, &[(0, 1), (1, 2)], false, false).unwrap();
        let r = simulate(&g, &Bfs { root: 0 }, None);
        assert_eq!(r.values, vec![0, 1, 2]);
        assert_eq!(r.supersteps, 3);
    }

    #[test]
    fn wcc_two_triangles() {
        let g = build_global_graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)], false, false).unwrap();
        assert_eq!(simulate(&g, &Wcc, None).values, vec![0, 0, 0, 3, 3, 3]);
    }

    #[test]
    fn pagerank_single_vertex_and_two_cycle() {
        let pr = PageRank::default();
        let g = build_global_graph(1, &[] as &[(u64, u64)], true, false).unwrap();
        let r = simulate(&g, &pr, None);
        assert!((f64::from_bits(r.values[0]) - 1.0).abs() < 1e-12);
        assert_eq!(r.supersteps, pr.iterations + 1);

        let g = build_global_graph(2, &[(0, 1), (1, 0)], true, false).unwrap();
        let r = simulate(&g, &pr, None);
        for w in r.values {
            assert!((f64::from_bits(w) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn cdlp_isolated_vertex_keeps_label() {
        let g = build_global_graph(3, &[(0, 1)], false, false).unwrap();
        assert_eq!(simulate(&g, &Cdlp::default(), None).values[2], 2);
    }
}
