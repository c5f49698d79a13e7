//! Seeded synthetic graphs for tests and benchmark matrices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{build_global_graph, GlobalGraph, VertexId};

/// Uniform random graph with about `avg_degree` edges per vertex (out-edges
/// when directed). Self-loops are skipped.
pub fn random_graph(n: u64, avg_degree: f64, directed: bool, seed: u64) -> Result<GlobalGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = if directed { n as f64 * avg_degree } else { n as f64 * avg_degree / 2.0 };
    let mut edges = Vec::with_capacity(target as usize);
    if n > 1 {
        while (edges.len() as f64) < target {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if a != b {
                edges.push((a, b));
            }
        }
    }
    build_global_graph(n, &edges, directed, false)
}

/// Same shape as [`random_graph`] with weights in `[1, 10)`.
pub fn random_weighted_graph(n: u64, avg_degree: f64, directed: bool, seed: u64) -> Result<GlobalGraph> {
    let g = random_graph(n, avg_degree, directed, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let edges: Vec<(VertexId, VertexId, f64)> = g
        .raw_edges()
        .into_iter()
        .map(|e| (e.src, e.dst, rng.gen_range(1.0..10.0)))
        .collect();
    build_global_graph(n, &edges, directed, true)
}

pub fn path(n: u64) -> Result<GlobalGraph> {
    let edges: Vec<(VertexId, VertexId)> = (1..n).map(|v| (v - 1, v)).collect();
    build_global_graph(n, &edges, false, false)
}

/// Random recursive tree: vertex `v > 0` hangs off a uniform earlier vertex.
pub fn random_tree(n: u64, seed: u64) -> Result<GlobalGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<(VertexId, VertexId)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    build_global_graph(n, &edges, false, false)
}

/// Center 0 joined to leaves `1..n`.
pub fn star(n: u64) -> Result<GlobalGraph> {
    let edges: Vec<(VertexId, VertexId)> = (1..n).map(|v| (0, v)).collect();
    build_global_graph(n, &edges, false, false)
}
