//! Engine and simulator against independent sequential implementations.

use std::collections::VecDeque;
use std::sync::Arc;

use nimbus_core::algorithms::Registry;
use nimbus_core::generate::{path, random_graph};
use nimbus_core::graph::{build_global_graph, GlobalGraph};
use nimbus_core::job::JobConfig;
use nimbus_core::maas::MemStore;
use nimbus_core::metrics::run_local;
use nimbus_core::simulator::simulate;

fn engine(g: &GlobalGraph, cfg: &JobConfig) -> (Vec<u64>, u64) {
    let r = run_local(g, cfg, Arc::new(MemStore::new()), Arc::new(Registry::with_builtins())).unwrap();
    (r.result.values, r.result.supersteps)
}

fn config(alg: &str, p: u32, mw: u32, t: u32, params: &[(&str, &str)]) -> JobConfig {
    let mut c = JobConfig::new(alg, p, mw, t);
    for (k, v) in params {
        c.params.insert(k.to_string(), v.to_string());
    }
    c
}

fn sim(g: &GlobalGraph, cfg: &JobConfig) -> (Vec<u64>, u64) {
    let alg = Registry::with_builtins().build(&cfg.algorithm, &cfg.params).unwrap();
    let s = simulate(g, alg.as_ref(), cfg.activation_start);
    (s.values, s.supersteps)
}

const LAYOUTS: [(u32, u32, u32); 4] = [(1, 1, 1), (4, 4, 1), (4, 2, 1), (5, 2, 1)];

fn queue_bfs(g: &GlobalGraph, root: u64) -> Vec<u64> {
    let mut dist = vec![u64::from(u32::MAX); g.vertex_count() as usize];
    dist[root as usize] = 0;
    let mut q = VecDeque::from([root]);
    while let Some(v) = q.pop_front() {
        for e in g.out_edges(v) {
            if dist[e.dst as usize] == u64::from(u32::MAX) {
                dist[e.dst as usize] = dist[v as usize] + 1;
                q.push_back(e.dst);
            }
        }
    }
    dist
}

fn union_find_min(g: &GlobalGraph) -> Vec<u64> {
    fn find(parent: &mut [u64], x: u64) -> u64 {
        let mut r = x;
        while parent[r as usize] != r {
            r = parent[r as usize];
        }
        let mut x = x;
        while parent[x as usize] != r {
            let next = parent[x as usize];
            parent[x as usize] = r;
            x = next;
        }
        r
    }
    let n = g.vertex_count();
    let mut parent: Vec<u64> = (0..n).collect();
    for v in 0..n {
        for e in g.out_edges(v) {
            let (a, b) = (find(&mut parent, v), find(&mut parent, e.dst));
            // the smaller root wins, so every root is its component's min id
            if a != b {
                parent[a.max(b) as usize] = a.min(b);
            }
        }
    }
    (0..n).map(|v| find(&mut parent, v)).collect()
}

/// Power iteration over an explicit dense transition matrix.
fn dense_pagerank(g: &GlobalGraph, iterations: u64, d: f64) -> Vec<f64> {
    let n = g.vertex_count() as usize;
    let mut m = vec![vec![0.0f64; n]; n];
    for u in 0..n {
        let out = g.out_edges(u as u64);
        if out.is_empty() {
            for row in m.iter_mut() {
                row[u] = 1.0 / n as f64;
            }
        } else {
            for e in out {
                m[e.dst as usize][u] += 1.0 / out.len() as f64;
            }
        }
    }
    let mut r = vec![1.0 / n as f64; n];
    for _ in 0..iterations {
        r = (0..n).map(|i| (1.0 - d) / n as f64 + d * (0..n).map(|j| m[i][j] * r[j]).sum::<f64>()).collect();
    }
    r
}

/// Synchronous label propagation: most frequent neighbor label (both
/// directions), smallest on ties.
fn lpa(g: &GlobalGraph, iterations: u64) -> Vec<u64> {
    let n = g.vertex_count();
    let mut labels: Vec<u64> = (0..n).collect();
    for _ in 0..iterations {
        let next = (0..n)
            .map(|v| {
                let mut seen: Vec<u64> = g.out_edges(v).iter().map(|e| labels[e.dst as usize]).collect();
                if g.is_directed() {
                    seen.extend(g.in_edges(v).iter().map(|e| labels[e.dst as usize]));
                }
                let mut best: Option<(usize, u64)> = None;
                for &l in &seen {
                    let c = seen.iter().filter(|&&x| x == l).count();
                    if best.is_none_or(|(bc, bl)| c > bc || (c == bc && l < bl)) {
                        best = Some((c, l));
                    }
                }
                best.map_or(labels[v as usize], |(_, l)| l)
            })
            .collect();
        labels = next;
    }
    labels
}

#[test]
fn bfs_matches_queue_bfs() {
    for (seed, directed) in [(1, false), (2, true)] {
        let g = random_graph(500, 4.0, directed, seed).unwrap();
        let want = queue_bfs(&g, 7);
        let cfg = config("BFS", 1, 1, 1, &[("root", "7")]);
        assert_eq!(sim(&g, &cfg).0, want);
        for (p, mw, t) in LAYOUTS {
            let cfg = config("BFS", p, mw, t, &[("root", "7")]);
            assert_eq!(engine(&g, &cfg).0, want, "p={p} mw={mw}");
        }
    }
}

#[test]
fn bfs_path_hand_values_and_sentinel() {
    let g = build_global_graph(4, &[(0, 1), (1, 2)], false, false).unwrap();
    let (v, _) = engine(&g, &config("BFS", 2, 2, 1, &[]));
    assert_eq!(v, vec![0, 1, 2, u64::from(u32::MAX)]);
}

#[test]
fn bfs_on_path_takes_length_plus_one_supersteps() {
    for len in [1u64, 4, 9] {
        let g = path(len + 1).unwrap();
        for (p, mw, t) in [(1, 1, 1), (2, 2, 1), (3, 1, 1)].into_iter().filter(|l| u64::from(l.0) <= len + 1) {
            assert_eq!(engine(&g, &config("BFS", p, mw, t, &[])).1, len + 1, "L={len} p={p}");
        }
    }
}

#[test]
fn wcc_matches_union_find() {
    let triangles = build_global_graph(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)], false, false).unwrap();
    let (v, _) = engine(&triangles, &config("WCC", 2, 2, 1, &[]));
    assert_eq!(v, vec![0, 0, 0, 3, 3, 3]);
    assert_eq!(union_find_min(&triangles), v);

    for (seed, directed) in [(3, false), (4, true)] {
        // sparse enough to leave several components
        let g = random_graph(400, 1.5, directed, seed).unwrap();
        let want = union_find_min(&g);
        assert!(want.iter().collect::<std::collections::BTreeSet<_>>().len() > 1);
        for (p, mw, t) in LAYOUTS {
            assert_eq!(engine(&g, &config("WCC", p, mw, t, &[])).0, want, "seed {seed} p={p} mw={mw}");
        }
    }
}

#[test]
fn wcc_on_path_converges_in_length_supersteps() {
    for len in [2u64, 5, 8] {
        let g = path(len + 1).unwrap();
        // one partition: label 0 reaches the far end after L relaxations
        let (v, steps) = engine(&g, &config("WCC", 1, 1, 1, &[]));
        assert!(v.iter().all(|&x| x == 0));
        assert_eq!(sim(&g, &config("WCC", 1, 1, 1, &[])).1, steps);
        assert_eq!(steps, len, "L={len}");
    }
}

#[test]
fn pagerank_matches_dense_power_iteration() {
    const ABS_TOL: f64 = 1e-9;
    let g = random_graph(200, 5.0, true, 11).unwrap();
    let want = dense_pagerank(&g, 10, 0.85);
    let cfg = config("PAGERANK", 1, 1, 1, &[("iterations", "10"), ("damping", "0.85")]);
    let check = |got: &[u64], what: &str| {
        for (v, (&w, &x)) in got.iter().zip(&want).enumerate() {
            let x_got = f64::from_bits(w);
            assert!((x_got - x).abs() <= ABS_TOL, "{what}: vertex {v}: {x_got} vs {x}");
        }
    };
    let (s, steps) = sim(&g, &cfg);
    check(&s, "simulator");
    assert_eq!(steps, 11);
    for (p, mw, t) in LAYOUTS {
        let cfg = JobConfig { partitions: p, max_worker: mw, threads: t, ..cfg.clone() };
        let (v, steps) = engine(&g, &cfg);
        check(&v, &format!("engine p={p} mw={mw}"));
        assert_eq!(steps, 11);
    }
}

#[test]
fn pagerank_runs_iterations_after_peval() {
    let g = random_graph(60, 4.0, false, 5).unwrap();
    for it in [1u64, 3, 7] {
        let it_s = it.to_string();
        let (_, steps) = engine(&g, &config("PAGERANK", 3, 3, 1, &[("iterations", &it_s)]));
        assert_eq!(steps, it + 1);
    }
}

#[test]
fn cdlp_matches_sequential_lpa() {
    let triangle = build_global_graph(3, &[(0, 1), (1, 2), (2, 0)], false, false).unwrap();
    let (v, _) = engine(&triangle, &config("CDLP", 3, 3, 1, &[("max_iterations", "2")]));
    assert_eq!(v, vec![0, 0, 0]);
    assert_eq!(lpa(&triangle, 2), v);

    // two 5-cliques joined by the edge 4-5
    let mut edges: Vec<(u64, u64)> = Vec::new();
    for base in [0u64, 5] {
        for a in base..base + 5 {
            edges.extend((a + 1..base + 5).map(|b| (a, b)));
        }
    }
    edges.push((4, 5));
    let cliques = build_global_graph(10, &edges, false, false).unwrap();
    let (v, _) = engine(&cliques, &config("CDLP", 2, 1, 1, &[("max_iterations", "3")]));
    assert_eq!(v, lpa(&cliques, 3));
    assert_eq!(v, vec![0, 0, 0, 0, 0, 5, 5, 5, 5, 5]);

    for (seed, directed) in [(6, false), (7, true)] {
        let g = random_graph(300, 6.0, directed, seed).unwrap();
        let want = lpa(&g, 10);
        for (p, mw, t) in LAYOUTS {
            assert_eq!(engine(&g, &config("CDLP", p, mw, t, &[])).0, want, "seed {seed} p={p} mw={mw}");
        }
    }
}

#[test]
fn single_vertex_graph() {
    let g = build_global_graph::<(u64, u64)>(1, &[], false, false).unwrap();
    for alg in ["BFS", "WCC", "CDLP", "PAGERANK"] {
        let (v, _) = engine(&g, &config(alg, 1, 1, 1, &[]));
        assert_eq!(v.len(), 1);
        if alg == "PAGERANK" {
            assert!((f64::from_bits(v[0]) - 1.0).abs() < 1e-12);
        } else {
            assert_eq!(v[0], 0);
        }
    }
}
