//! Properties of ingestion, partitioning, bitmaps and codecs.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nimbus_core::bitmap::{masked_intersection, PartitionBitmap, WorkerBitmap};
use nimbus_core::codec::{
    decode_adjacency, decode_message_block, decode_partition, encode_adjacency, encode_message_block,
    encode_partition, Identity, MessageBlock,
};
use nimbus_core::generate::random_graph;
use nimbus_core::graph::{build_global_graph, GlobalGraph, IdMap};
use nimbus_core::maas::{Actor, MaasClient, MemStore};
use nimbus_core::partition::{remap_partition, Assignment};
use nimbus_core::partitioner::{load_partition, partition_by_degree, read_manifest, write_partitions};
use proptest::prelude::*;

fn edges_strategy() -> impl Strategy<Value = (u64, Vec<(u64, u64)>, bool)> {
    (2u64..60, any::<bool>()).prop_flat_map(|(n, directed)| {
        (Just(n), prop::collection::vec((0..n, 0..n), 0..200), Just(directed))
    })
}

/// Degrees counted straight from the raw edge list.
fn raw_degrees(n: u64, edges: &[(u64, u64)], directed: bool) -> Vec<u64> {
    let distinct: BTreeSet<(u64, u64)> = edges
        .iter()
        .flat_map(|&(a, b)| if directed { vec![(a, b)] } else { vec![(a, b), (b, a)] })
        .collect();
    let mut deg = vec![0; n as usize];
    for (a, _) in distinct {
        deg[a as usize] += 1;
    }
    deg
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn out_degrees_match_raw_edge_scan((n, edges, directed) in edges_strategy()) {
        let g = build_global_graph(n, &edges, directed, false).unwrap();
        let want = raw_degrees(n, &edges, directed);
        let got: Vec<u64> = (0..n).map(|v| g.out_edges(v).len() as u64).collect();
        prop_assert_eq!(got, want);
        for v in 0..n {
            prop_assert!(g.out_edges(v).windows(2).all(|w| w[0].dst < w[1].dst));
        }
    }

    #[test]
    fn adjacency_bitmaps_match_neighbor_owner_scan((n, edges, directed) in edges_strategy(), p in 1u32..6) {
        prop_assume!(u64::from(p) <= n);
        let g = build_global_graph(n, &edges, directed, false).unwrap();
        let a = partition_by_degree(&g, p).unwrap();
        let mut covered = 0;
        for pid in 0..p {
            let part = remap_partition(&g, &a, pid);
            covered += part.inner_count();
            for (slot, &gid) in part.inner_ids().iter().enumerate() {
                let mut owners = BTreeSet::new();
                let mut nbrs: Vec<u64> = g.out_edges(gid).iter().map(|e| e.dst).collect();
                if directed {
                    nbrs.extend(g.in_edges(gid).iter().map(|e| e.dst));
                }
                for u in nbrs {
                    if a.owner(u) != pid {
                        owners.insert(a.owner(u));
                    }
                    // every endpoint resolves to a local slot
                    prop_assert!(part.local_slot(u).is_some());
                }
                let bits: BTreeSet<u32> = part.adj_partitions(slot as u32).iter().collect();
                prop_assert_eq!(bits, owners);
            }
        }
        prop_assert_eq!(covered as u64, n);
    }

    #[test]
    fn masked_intersection_matches_bit_loop(v in prop::collection::btree_set(0u32..64, 0..64), w in prop::collection::btree_set(0u32..64, 0..64)) {
        let vb = PartitionBitmap::from_ids(64, v.iter().copied());
        let wb = WorkerBitmap::from_ids(64, w.iter().copied());
        let got: Vec<u32> = masked_intersection(&vb, &wb).unwrap().iter().collect();
        let want: Vec<u32> = (0..64).filter(|i| vb.contains(*i) && wb.contains(*i)).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn sorted_ids_encode_compactly(ids in prop::collection::btree_set(0u64..(1 << 28), 0..200)) {
        let ids: Vec<u64> = ids.into_iter().collect();
        let enc = encode_adjacency(&ids).unwrap();
        prop_assert_eq!(decode_adjacency(&enc).unwrap(), ids.clone());
        // a count header of at most 2 bytes for < 16384 ids
        prop_assert!(enc.len() <= 4 * ids.len() + 2);
    }
}

#[test]
fn prefix_sum_cut_matches_linear_scan() {
    let mut compared = 0;
    for seed in 0..20u64 {
        let g = random_graph(300, 3.0 + (seed % 5) as f64, seed % 2 == 0, seed).unwrap();
        let degrees: Vec<u64> = (0..g.vertex_count()).map(|v| g.degree(v)).collect();
        let total: u64 = degrees.iter().sum();
        for p in [1u32, 2, 3, 4, 7, 8] {
            // scan: range k starts at the first vertex whose prefix reaches k/p of the total
            let mut starts = vec![0u64];
            let mut acc = 0u64;
            for (v, &d) in degrees.iter().enumerate() {
                while starts.len() < p as usize && acc * u64::from(p) >= total * starts.len() as u64 {
                    starts.push(v as u64);
                }
                acc += d;
            }
            while starts.len() < p as usize {
                starts.push(degrees.len() as u64);
            }
            let a = partition_by_degree(&g, p).unwrap();
            let got: Vec<u64> = (0..p).map(|pid| a.ranges(pid)[0][0]).collect();
            if starts.windows(2).all(|w| w[0] < w[1]) && *starts.last().unwrap() < degrees.len() as u64 {
                assert_eq!(got, starts, "seed {seed} p={p}");
                compared += 1;
            }
            let max_deg = *degrees.iter().max().unwrap();
            for pid in 0..p {
                let r = a.ranges(pid);
                assert_eq!(r.len(), 1, "ranges are contiguous");
                let sum: u64 = (r[0][0]..r[0][1]).map(|v| degrees[v as usize]).sum();
                assert!(sum <= total / u64::from(p) + 2 * max_deg, "seed {seed} p={p} pid={pid}: {sum}");
            }
        }
    }
    assert!(compared > 100, "{compared}");
}

#[test]
fn degree_histogram_of_generated_graph() {
    let g = random_graph(100, 6.0, false, 42).unwrap();
    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    for e in g.raw_edges() {
        *hist.entry(e.src).or_default() += 1;
        if e.src != e.dst {
            *hist.entry(e.dst).or_default() += 1;
        }
    }
    for v in 0..100 {
        assert_eq!(g.degree(v), hist.get(&v).copied().unwrap_or(0), "vertex {v}");
    }
}

fn blob_roundtrip(g: &GlobalGraph, p: u32) {
    let client = MaasClient::new(Arc::new(MemStore::new()), None, Actor::Tool);
    let a = partition_by_degree(g, p).unwrap();
    write_partitions(g, &a, &IdMap::identity(g.vertex_count()), &client).unwrap();
    let m = read_manifest(&client).unwrap();
    assert_eq!(m.partitions.iter().map(|e| e.inner_count).sum::<u64>(), g.vertex_count());
    for pid in 0..p {
        let want = remap_partition(g, &a, pid);
        let got = load_partition(&client, &m, pid).unwrap();
        assert_eq!(got, want);
        assert_eq!(encode_partition(&got).unwrap(), encode_partition(&want).unwrap());
    }
}

#[test]
fn partition_blobs_roundtrip() {
    for (seed, directed) in [(1, false), (2, true)] {
        blob_roundtrip(&random_graph(250, 5.0, directed, seed).unwrap(), 4);
    }
    let weighted = nimbus_core::generate::random_weighted_graph(120, 4.0, true, 9).unwrap();
    blob_roundtrip(&weighted, 3);
}

#[test]
fn empty_adjacency_partition_is_minimal() {
    let g = build_global_graph::<(u64, u64)>(3, &[], false, false).unwrap();
    let part = remap_partition(&g, &Assignment::single(3), 0);
    let blob = encode_partition(&part).unwrap();
    // header 9 bytes, one zero count and one empty bitmap byte per vertex
    assert_eq!(blob.len(), 9 + 3 * 2);
    let back = decode_partition(&blob, vec![0, 1, 2]).unwrap();
    assert!((0..3).all(|v| back.out_neighbors(v).is_empty()));
}

#[test]
fn binary_block_beats_text() {
    let mut b = MessageBlock::new(0, 1, 3, 8);
    b.entries = (0..10_000u64).map(|i| (i * 7 + 1_000_000, i * 31)).collect();
    let bin = encode_message_block(&b, &Identity).unwrap();
    let text: String = b.entries.iter().map(|(k, v)| format!("{k} {v}\n")).collect();
    assert!(bin.len() < text.len(), "{} vs {}", bin.len(), text.len());
    assert_eq!(decode_message_block(&bin, 8, &Identity).unwrap(), b);
}
