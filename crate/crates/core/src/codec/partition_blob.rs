//! Binary partition files.
//!
//! Layout:
//!
//! ```text
//! "GFP1" | flags (bit0 directed, bit1 weighted) | p | pid | inner count |
//! outer count | outer ids (first, then deltas) |
//! out-adjacency of each inner vertex (count, first, deltas[, f64 weights]) |
//! adjacent-partition bitmap of each inner vertex (ceil(p/8) bytes) |
//! [directed only] in-adjacency of each inner vertex
//! ```
//!
//! All integers are varints, adjacency ids are global ids. Inner global ids
//! are not stored in the blob; they come from the manifest.

use super::adjacency::{read_adjacency, read_sorted_ids, write_adjacency, write_sorted_ids};
use super::varint::{write_varint, ByteReader};
use crate::bitmap::PartitionBitmap;
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::partition::{GlobalLists, Partition};

pub const PARTITION_MAGIC: &[u8; 4] = b"GFP1";

const FLAG_DIRECTED: u8 = 0b01;
const FLAG_WEIGHTED: u8 = 0b10;

pub fn encode_partition(part: &Partition) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + part.slot_count() * 2 + part.degree_sum() * 2);
    out.extend_from_slice(PARTITION_MAGIC);
    let mut flags = 0;
    if part.is_directed() {
        flags |= FLAG_DIRECTED;
    }
    if part.is_weighted() {
        flags |= FLAG_WEIGHTED;
    }
    out.push(flags);
    write_varint(&mut out, part.num_partitions() as u64);
    write_varint(&mut out, part.id() as u64);
    write_varint(&mut out, part.inner_count() as u64);
    write_varint(&mut out, part.outer_count() as u64);
    write_sorted_ids(&mut out, part.outer_ids())?;

    write_lists(&mut out, &part.global_lists(part.out_adjacency()))?;
    for u in 0..part.inner_count() as u32 {
        out.extend_from_slice(&part.adj_partitions(u).to_bytes());
    }
    if let Some(in_adj) = part.in_adj_raw() {
        write_lists(&mut out, &part.global_lists(in_adj))?;
    }
    Ok(out)
}

fn write_lists(out: &mut Vec<u8>, lists: &GlobalLists) -> Result<()> {
    for (i, ids) in lists.ids.iter().enumerate() {
        let w = lists.weights.as_ref().map(|w| &w[i][..]);
        write_adjacency(out, ids, w)?;
    }
    Ok(())
}

fn read_lists(r: &mut ByteReader<'_>, n: usize, weighted: bool) -> Result<GlobalLists> {
    let mut ids = Vec::with_capacity(n);
    let mut weights = weighted.then(|| Vec::with_capacity(n));
    for _ in 0..n {
        let (list, w) = read_adjacency(r, weighted)?;
        ids.push(list);
        if let (Some(all), Some(w)) = (weights.as_mut(), w) {
            all.push(w);
        }
    }
    Ok(GlobalLists { ids, weights })
}

/// Header fields readable without the inner id list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlobHeader {
    pub directed: bool,
    pub weighted: bool,
    pub num_partitions: u32,
    pub pid: u32,
    pub inner_count: usize,
    pub outer_count: usize,
}

fn read_header(r: &mut ByteReader<'_>) -> Result<BlobHeader> {
    if r.bytes(4)? != PARTITION_MAGIC {
        return Err(Error::codec("bad partition magic"));
    }
    let flags = r.u8()?;
    if flags & !(FLAG_DIRECTED | FLAG_WEIGHTED) != 0 {
        return Err(Error::codec(format!("unknown partition flags {flags:#04x}")));
    }
    let num_partitions = r.varint_u32("partition count")?;
    let pid = r.varint_u32("partition id")?;
    if num_partitions == 0 || pid >= num_partitions {
        return Err(Error::codec(format!("partition id {pid} out of range for p={num_partitions}")));
    }
    Ok(BlobHeader {
        directed: flags & FLAG_DIRECTED != 0,
        weighted: flags & FLAG_WEIGHTED != 0,
        num_partitions,
        pid,
        inner_count: r.varint()? as usize,
        outer_count: r.varint()? as usize,
    })
}

pub fn decode_partition_header(bytes: &[u8]) -> Result<BlobHeader> {
    read_header(&mut ByteReader::new(bytes))
}

pub fn decode_partition(bytes: &[u8], inner_ids: Vec<VertexId>) -> Result<Partition> {
    let mut r = ByteReader::new(bytes);
    let h = read_header(&mut r)?;
    if inner_ids.len() != h.inner_count {
        return Err(Error::codec(format!(
            "blob declares {} inner vertices, manifest lists {}",
            h.inner_count,
            inner_ids.len()
        )));
    }
    let outer_ids = read_sorted_ids(&mut r, h.outer_count)?;
    let out_lists = read_lists(&mut r, h.inner_count, h.weighted)?;
    let width = (h.num_partitions as usize).div_ceil(8);
    let mut bitmaps = Vec::with_capacity(h.inner_count);
    for _ in 0..h.inner_count {
        let bm = PartitionBitmap::from_bytes(h.num_partitions, r.bytes(width)?)?;
        if bm.contains(h.pid) {
            return Err(Error::codec("adjacent-partition bitmap contains its own partition"));
        }
        bitmaps.push(bm);
    }
    let in_lists = if h.directed { Some(read_lists(&mut r, h.inner_count, h.weighted)?) } else { None };
    r.finish()?;
    Partition::from_global_lists(
        h.pid,
        h.num_partitions,
        h.directed,
        h.weighted,
        inner_ids,
        outer_ids,
        out_lists,
        in_lists,
        bitmaps,
    )
}
