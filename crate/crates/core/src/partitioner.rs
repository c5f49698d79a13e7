//! Offline degree-balanced partitioning and upload of partition blobs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codec::varint::{write_varint, ByteReader};
use crate::codec::{decode_partition, encode_partition};
use crate::error::{Error, Result};
use crate::graph::{GlobalGraph, IdMap};
use crate::maas::{MaasClient, StorageKey};
use crate::partition::{expand_ranges, remap_partition, Assignment, Partition, PartitionId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionEntry {
    pub pid: PartitionId,
    pub inner_count: u64,
    /// Adjacency entries stored for the inner vertices, both directions.
    pub edge_count: u64,
    pub byte_size: u64,
    /// Lowercase hex SHA-256 of the blob.
    pub checksum: String,
    /// Inner global ids as half-open ranges.
    pub inner_ranges: Vec<[u64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub num_partitions: u32,
    pub vertex_count: u64,
    pub directed: bool,
    pub weighted: bool,
    pub partitions: Vec<PartitionEntry>,
}

impl PartitionManifest {
    pub fn entry(&self, pid: PartitionId) -> Result<&PartitionEntry> {
        self.partitions
            .get(pid as usize)
            .filter(|e| e.pid == pid)
            .ok_or_else(|| Error::Setup(format!("manifest has no entry for partition {pid}")))
    }

    pub fn inner_ids(&self, pid: PartitionId) -> Result<Vec<u64>> {
        Ok(expand_ranges(&self.entry(pid)?.inner_ranges))
    }

    /// Owner of every vertex, rebuilt from the inner ranges.
    pub fn assignment(&self) -> Result<Assignment> {
        let mut owners = vec![u32::MAX; self.vertex_count as usize];
        for e in &self.partitions {
            for [a, b] in &e.inner_ranges {
                for v in *a..*b {
                    let slot = owners
                        .get_mut(v as usize)
                        .ok_or_else(|| Error::Setup(format!("manifest range exceeds vertex count: {v}")))?;
                    *slot = e.pid;
                }
            }
        }
        if owners.contains(&u32::MAX) {
            return Err(Error::Setup("manifest ranges do not cover every vertex".into()));
        }
        Assignment::new(self.num_partitions, owners)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Cuts the id space into `p` contiguous ranges of roughly equal summed
/// degree. Boundary `k` is the first vertex whose degree prefix reaches
/// `k * total / p`, pushed forward or back as needed so that no range is
/// empty.
pub fn partition_by_degree(graph: &GlobalGraph, p: u32) -> Result<Assignment> {
    let n = graph.vertex_count();
    if p == 0 {
        return Err(Error::Config("partition count must be at least 1".into()));
    }
    if u64::from(p) > n {
        return Err(Error::Config(format!("cannot split {n} vertices into {p} partitions")));
    }
    let degrees: Vec<u64> = (0..n).map(|v| graph.degree(v)).collect();
    let bounds = degree_cut(&degrees, p);
    let mut owners = Vec::with_capacity(n as usize);
    for (pid, w) in bounds.windows(2).enumerate() {
        owners.extend(std::iter::repeat(pid as u32).take(w[1] - w[0]));
    }
    Assignment::new(p, owners)
}

/// Range starts `b_0 = 0 < b_1 < ... < b_p = n`.
fn degree_cut(degrees: &[u64], p: u32) -> Vec<usize> {
    let n = degrees.len();
    let p = p as usize;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0u128);
    for &d in degrees {
        prefix.push(prefix.last().unwrap() + u128::from(d));
    }
    let total = prefix[n];
    let mut bounds = vec![0usize; p + 1];
    bounds[p] = n;
    for k in 1..p {
        let target = total * k as u128;
        // smallest i with prefix[i] * p >= k * total
        let i = prefix.partition_point(|&x| x * (p as u128) < target);
        bounds[k] = i.clamp(bounds[k - 1] + 1, n - (p - k));
    }
    bounds
}

/// Serializes every partition to `part/{pid}`, then the id map and the
/// manifest. The manifest is written last so its presence implies the blobs.
pub fn write_partitions(
    graph: &GlobalGraph,
    assignment: &Assignment,
    id_map: &IdMap,
    client: &MaasClient,
) -> Result<PartitionManifest> {
    let p = assignment.num_partitions();
    let mut partitions = Vec::with_capacity(p as usize);
    for pid in 0..p {
        let part = remap_partition(graph, assignment, pid);
        let blob = encode_partition(&part)?;
        client
            .put(&StorageKey::partition(pid), &blob)
            .map_err(|e| Error::Setup(format!("writing partition {pid}: {e}")))?;
        partitions.push(PartitionEntry {
            pid,
            inner_count: part.inner_count() as u64,
            edge_count: part.degree_sum() as u64,
            byte_size: blob.len() as u64,
            checksum: sha256_hex(&blob),
            inner_ranges: assignment.ranges(pid),
        });
    }
    let manifest = PartitionManifest {
        num_partitions: p,
        vertex_count: graph.vertex_count(),
        directed: graph.is_directed(),
        weighted: graph.is_weighted(),
        partitions,
    };
    client
        .put(&StorageKey::id_map(), &encode_id_map(id_map))
        .map_err(|e| Error::Setup(format!("writing id map: {e}")))?;
    client
        .put(&StorageKey::manifest(), &serde_json::to_vec_pretty(&manifest)?)
        .map_err(|e| Error::Setup(format!("writing manifest: {e}")))?;
    Ok(manifest)
}

pub fn read_manifest(client: &MaasClient) -> Result<PartitionManifest> {
    let bytes = client.get(&StorageKey::manifest()).map_err(|e| match e {
        Error::NotFound(_) => Error::Setup("partition manifest missing; partition the graph first".into()),
        e => e,
    })?;
    let m: PartitionManifest = serde_json::from_slice(&bytes)?;
    if m.partitions.len() != m.num_partitions as usize {
        return Err(Error::Setup("manifest partition list does not match partition count".into()));
    }
    Ok(m)
}

/// Fetches and decodes one partition, verifying its checksum.
pub fn load_partition(client: &MaasClient, manifest: &PartitionManifest, pid: PartitionId) -> Result<Partition> {
    let entry = manifest.entry(pid)?;
    let blob = client.get(&StorageKey::partition(pid))?;
    let sum = sha256_hex(&blob);
    if sum != entry.checksum {
        return Err(Error::Setup(format!(
            "partition {pid} checksum mismatch: manifest {} blob {sum}",
            entry.checksum
        )));
    }
    decode_partition(&blob, expand_ranges(&entry.inner_ranges))
}

pub fn encode_id_map(map: &IdMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(map.len() * 3 + 4);
    write_varint(&mut out, map.len() as u64);
    for &id in map.external_ids() {
        write_varint(&mut out, id);
    }
    out
}

pub fn decode_id_map(bytes: &[u8]) -> Result<IdMap> {
    let mut r = ByteReader::new(bytes);
    let n = r.varint()? as usize;
    if n > bytes.len() {
        return Err(Error::codec("id map count exceeds payload"));
    }
    let ids = (0..n).map(|_| r.varint()).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    IdMap::new(ids).map_err(|e| Error::codec(e.to_string()))
}

pub fn read_id_map(client: &MaasClient) -> Result<IdMap> {
    decode_id_map(&client.get(&StorageKey::id_map())?)
}
