//! Global graph model and edge-list ingestion.
//!
//! Vertex ids are dense (`0..vertex_count`) once a graph is built. External
//! ids found in edge files are remapped at ingestion and the mapping is kept
//! in an [`IdMap`] so results can be reported in the caller's id space.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub dst: VertexId,
    pub weight: Option<f64>,
}

impl Edge {
    pub fn new(dst: VertexId) -> Self {
        Edge { dst, weight: None }
    }

    pub fn weighted(dst: VertexId, weight: f64) -> Self {
        Edge { dst, weight: Some(weight) }
    }
}

/// One input edge before symmetrization and deduplication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEdge {
    pub src: VertexId,
    pub dst: VertexId,
    pub weight: Option<f64>,
}

impl RawEdge {
    pub fn new(src: VertexId, dst: VertexId) -> Self {
        RawEdge { src, dst, weight: None }
    }
}

impl From<(VertexId, VertexId)> for RawEdge {
    fn from((src, dst): (VertexId, VertexId)) -> Self {
        RawEdge::new(src, dst)
    }
}

impl From<(VertexId, VertexId, f64)> for RawEdge {
    fn from((src, dst, w): (VertexId, VertexId, f64)) -> Self {
        RawEdge { src, dst, weight: Some(w) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalGraph {
    vertex_count: u64,
    directed: bool,
    weighted: bool,
    /// Out-edges per vertex, sorted by `dst`. For undirected graphs this is
    /// the symmetric neighbor list.
    out_edges: Vec<Vec<Edge>>,
    /// In-edges per vertex (directed graphs only), sorted by source id. The
    /// `dst` field of each entry holds the source vertex.
    in_edges: Option<Vec<Vec<Edge>>>,
}

/// Builds a graph from dense-id edges.
///
/// Self-loops are kept, duplicate edges collapse onto the first occurrence
/// (and its weight), and undirected input is symmetrized.
pub fn build_global_graph<E: Into<RawEdge> + Copy>(
    vertex_count: u64,
    edges: &[E],
    directed: bool,
    weighted: bool,
) -> Result<GlobalGraph> {
    let n = usize::try_from(vertex_count)
        .map_err(|_| Error::Ingestion(format!("vertex count {vertex_count} too large")))?;
    let mut out: Vec<Vec<Edge>> = vec![Vec::new(); n];
    let mut inc: Vec<Vec<Edge>> = if directed { vec![Vec::new(); n] } else { Vec::new() };

    for (line, e) in edges.iter().enumerate() {
        let e: RawEdge = (*e).into();
        for id in [e.src, e.dst] {
            if id >= vertex_count {
                return Err(Error::Ingestion(format!(
                    "edge #{line}: vertex id {id} >= declared vertex count {vertex_count}"
                )));
            }
        }
        match (weighted, e.weight) {
            (false, Some(_)) => {
                return Err(Error::Ingestion(format!(
                    "edge #{line}: weight given for an unweighted graph"
                )))
            }
            (true, None) => {
                return Err(Error::Ingestion(format!(
                    "edge #{line}: missing weight for a weighted graph"
                )))
            }
            _ => {}
        }
        let (s, d) = (e.src as usize, e.dst as usize);
        out[s].push(Edge { dst: e.dst, weight: e.weight });
        if directed {
            inc[d].push(Edge { dst: e.src, weight: e.weight });
        } else if s != d {
            out[d].push(Edge { dst: e.src, weight: e.weight });
        }
    }

    for list in out.iter_mut().chain(inc.iter_mut()) {
        sort_dedup(list);
    }

    Ok(GlobalGraph {
        vertex_count,
        directed,
        weighted,
        out_edges: out,
        in_edges: directed.then_some(inc),
    })
}

// Stable sort keeps the first occurrence of each destination at the front of
// its run, so `dedup_by_key` retains the first weight.
fn sort_dedup(list: &mut Vec<Edge>) {
    list.sort_by_key(|e| e.dst);
    list.dedup_by_key(|e| e.dst);
}

impl GlobalGraph {
    pub fn vertex_count(&self) -> u64 {
        self.vertex_count
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn out_edges(&self, v: VertexId) -> &[Edge] {
        &self.out_edges[v as usize]
    }

    /// In-edges of `v`; each entry's `dst` is the edge source. Equal to
    /// [`out_edges`](Self::out_edges) on undirected graphs.
    pub fn in_edges(&self, v: VertexId) -> &[Edge] {
        match &self.in_edges {
            Some(inc) => &inc[v as usize],
            None => &self.out_edges[v as usize],
        }
    }

    /// Total stored degree: out + in for directed graphs, neighbor count for
    /// undirected ones.
    pub fn degree(&self, v: VertexId) -> u64 {
        if self.directed {
            (self.out_edges(v).len() + self.in_edges(v).len()) as u64
        } else {
            self.out_edges(v).len() as u64
        }
    }

    pub fn edge_count(&self) -> u64 {
        self.out_edges.iter().map(|l| l.len() as u64).sum()
    }

    /// Sorted, deduplicated union of in- and out-neighbors.
    pub fn neighbors(&self, v: VertexId) -> Vec<VertexId> {
        let mut ids: Vec<VertexId> = self.out_edges(v).iter().map(|e| e.dst).collect();
        if self.directed {
            ids.extend(self.in_edges(v).iter().map(|e| e.dst));
            ids.sort_unstable();
            ids.dedup();
        }
        ids
    }

    /// Raw edge list in source order, suitable for rebuilding the graph.
    pub fn raw_edges(&self) -> Vec<RawEdge> {
        let mut edges = Vec::with_capacity(self.edge_count() as usize);
        for (src, list) in self.out_edges.iter().enumerate() {
            for e in list {
                if !self.directed && e.dst < src as u64 {
                    continue;
                }
                edges.push(RawEdge { src: src as u64, dst: e.dst, weight: e.weight });
            }
        }
        edges
    }

    /// Rebuilds a graph from per-vertex out-edge lists that are already
    /// sorted and deduplicated (e.g. decoded from partitions).
    pub fn from_out_lists(directed: bool, weighted: bool, lists: Vec<Vec<Edge>>) -> Result<Self> {
        let n = lists.len() as u64;
        let mut edges = Vec::new();
        for (src, list) in lists.iter().enumerate() {
            for e in list {
                if !directed && e.dst < src as u64 {
                    continue;
                }
                edges.push(RawEdge { src: src as u64, dst: e.dst, weight: e.weight });
            }
        }
        build_global_graph(n, &edges, directed, weighted)
    }
}

/// Mapping between dense ids and the ids used in the original input.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdMap {
    external: Vec<u64>,
    index: HashMap<u64, VertexId>,
}

impl IdMap {
    pub fn new(external: Vec<u64>) -> Result<Self> {
        let mut index = HashMap::with_capacity(external.len());
        for (dense, &ext) in external.iter().enumerate() {
            if index.insert(ext, dense as VertexId).is_some() {
                return Err(Error::Ingestion(format!("duplicate vertex id {ext}")));
            }
        }
        Ok(IdMap { external, index })
    }

    pub fn identity(n: u64) -> Self {
        IdMap::new((0..n).collect()).expect("identity map has unique ids")
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn to_external(&self, dense: VertexId) -> u64 {
        self.external[dense as usize]
    }

    pub fn to_dense(&self, external: u64) -> Option<VertexId> {
        self.index.get(&external).copied()
    }

    pub fn external_ids(&self) -> &[u64] {
        &self.external
    }
}

/// A parsed edge-list file before id remapping.
#[derive(Debug, Clone, Default)]
pub struct EdgeList {
    pub edges: Vec<(u64, u64, Option<f64>)>,
}

/// Parses the `src dst [weight]` text format. `#` lines and blank lines are
/// skipped.
pub fn parse_edge_list(text: &str, weighted: bool) -> Result<EdgeList> {
    let mut edges = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut id = |what: &str| -> Result<u64> {
            let tok = fields
                .next()
                .ok_or_else(|| Error::Ingestion(format!("line {}: missing {what}", no + 1)))?;
            tok.parse()
                .map_err(|_| Error::Ingestion(format!("line {}: bad {what} `{tok}`", no + 1)))
        };
        let src = id("source")?;
        let dst = id("destination")?;
        let weight = match fields.next() {
            Some(tok) => Some(
                tok.parse::<f64>()
                    .map_err(|_| Error::Ingestion(format!("line {}: bad weight `{tok}`", no + 1)))?,
            ),
            None => None,
        };
        if fields.next().is_some() {
            return Err(Error::Ingestion(format!("line {}: trailing fields", no + 1)));
        }
        if weight.is_some() && !weighted {
            return Err(Error::Ingestion(format!(
                "line {}: weight given for an unweighted graph",
                no + 1
            )));
        }
        if weight.is_none() && weighted {
            return Err(Error::Ingestion(format!("line {}: missing weight", no + 1)));
        }
        edges.push((src, dst, weight));
    }
    Ok(EdgeList { edges })
}

/// Parses a vertex file: one external id per line.
pub fn parse_vertex_list(text: &str) -> Result<Vec<u64>> {
    text.lines()
        .enumerate()
        .map(|(no, l)| (no, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(no, l)| {
            let tok = l.split_whitespace().next().unwrap_or(l);
            tok.parse()
                .map_err(|_| Error::Ingestion(format!("line {}: bad vertex id `{tok}`", no + 1)))
        })
        .collect()
}

/// Remaps external ids to dense ids and builds the graph.
///
/// With a vertex list, dense ids follow the list order and every edge
/// endpoint must appear in it. Without one, the distinct endpoint ids are
/// sorted ascending.
pub fn ingest(
    edges: &EdgeList,
    vertices: Option<&[u64]>,
    directed: bool,
    weighted: bool,
) -> Result<(GlobalGraph, IdMap)> {
    let ids = match vertices {
        Some(list) => IdMap::new(list.to_vec())?,
        None => {
            let mut ext: Vec<u64> = edges.edges.iter().flat_map(|&(s, d, _)| [s, d]).collect();
            ext.sort_unstable();
            ext.dedup();
            IdMap::new(ext)?
        }
    };
    let mut raw = Vec::with_capacity(edges.edges.len());
    for &(s, d, w) in &edges.edges {
        let lookup = |x: u64| {
            ids.to_dense(x)
                .ok_or_else(|| Error::Ingestion(format!("edge endpoint {x} missing from vertex file")))
        };
        raw.push(RawEdge { src: lookup(s)?, dst: lookup(d)?, weight: w });
    }
    let graph = build_global_graph(ids.len() as u64, &raw, directed, weighted)?;
    Ok((graph, ids))
}

/// Reads an edge file and optional vertex file from disk and ingests them.
pub fn load_graph_files(
    edge_file: &std::path::Path,
    vertex_file: Option<&std::path::Path>,
    directed: bool,
    weighted: bool,
) -> Result<(GlobalGraph, IdMap)> {
    let edges = parse_edge_list(&std::fs::read_to_string(edge_file)?, weighted)?;
    let vertices = vertex_file.map(|p| std::fs::read_to_string(p).map_err(Error::from)).transpose()?;
    let vertices = vertices.as_deref().map(parse_vertex_list).transpose()?;
    ingest(&edges, vertices.as_deref(), directed, weighted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undirected_edge_is_symmetrized() {
        let g = build_global_graph(2, &[(0u64, 1u64)], false, false).unwrap();
        assert_eq!(g.out_edges(0), &[Edge::new(1)]);
        assert_eq!(g.out_edges(1), &[Edge::new(0)]);
    }

    #[test]
    fn empty_edge_list_gives_isolated_vertices() {
        let g = build_global_graph::<(u64, u64)>(3, &[], false, false).unwrap();
        assert_eq!(g.vertex_count(), 3);
        for v in 0..3 {
            assert!(g.out_edges(v).is_empty());
        }
    }

    #[test]
    fn out_of_range_id_is_rejected() {
        let err = build_global_graph(2, &[(0u64, 2u64)], true, false).unwrap_err();
        assert!(matches!(err, Error::Ingestion(_)));
    }

    #[test]
    fn weight_on_unweighted_graph_is_rejected() {
        let err = build_global_graph(2, &[(0u64, 1u64, 2.0)], true, false).unwrap_err();
        assert!(matches!(err, Error::Ingestion(_)));
    }

    #[test]
    fn duplicates_keep_first_weight_and_self_loops_stay() {
        let g = build_global_graph(
            3,
            &[(0u64, 2u64, 5.0), (0, 1, 1.0), (0, 2, 9.0), (1, 1, 3.0)],
            true,
            true,
        )
        .unwrap();
        assert_eq!(g.out_edges(0), &[Edge::weighted(1, 1.0), Edge::weighted(2, 5.0)]);
        assert_eq!(g.out_edges(1), &[Edge::weighted(1, 3.0)]);
        assert_eq!(g.in_edges(2), &[Edge::weighted(0, 5.0)]);
    }

    #[test]
    fn parse_skips_comments() {
        let text = "# header\n1 2\n\n2 3 \n";
        let list = parse_edge_list(text, false).unwrap();
        assert_eq!(list.edges, vec![(1, 2, None), (2, 3, None)]);
    }

    #[test]
    fn ingest_remaps_sparse_ids() {
        let list = parse_edge_list("10 30\n30 20\n", false).unwrap();
        let (g, ids) = ingest(&list, None, true, false).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(ids.external_ids(), &[10, 20, 30]);
        assert_eq!(g.out_edges(0), &[Edge::new(2)]);
        assert_eq!(g.out_edges(2), &[Edge::new(1)]);
    }

    #[test]
    fn ingest_with_vertex_file_keeps_isolated() {
        let list = parse_edge_list("5 7\n", false).unwrap();
        let (g, ids) = ingest(&list, Some(&[7, 5, 9]), false, false).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(ids.to_dense(9), Some(2));
        assert!(g.out_edges(2).is_empty());
        assert_eq!(g.out_edges(0), &[Edge::new(1)]);
    }
}
