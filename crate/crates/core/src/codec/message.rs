use serde::{Deserialize, Serialize};

use super::adjacency::{read_sorted_ids, write_sorted_ids};
use super::compression::Compression;
use super::varint::{write_varint, ByteReader};
use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Destination marker for rotating-mode blocks that every other worker reads.
pub const BROADCAST: u32 = u32::MAX;

/// Aggregated vertex updates from one worker to another for one superstep.
///
/// Values are raw little-endian words; only the low `value_width` bytes are
/// significant on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageBlock {
    pub src_worker: u32,
    pub dst_worker: u32,
    pub superstep: u64,
    pub value_width: u8,
    pub entries: Vec<(VertexId, u64)>,
}

impl MessageBlock {
    pub fn new(src_worker: u32, dst_worker: u32, superstep: u64, value_width: u8) -> Self {
        MessageBlock { src_worker, dst_worker, superstep, value_width, entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_width(width: u8) -> Result<usize> {
    match width {
        4 | 8 => Ok(width as usize),
        w => Err(Error::codec(format!("unsupported value width {w}"))),
    }
}

/// Header `src, dst, superstep, count` (varints) and a width byte, then the
/// delta-coded ids and the packed values.
pub fn encode_message_block(block: &MessageBlock, compression: &dyn Compression) -> Result<Vec<u8>> {
    let width = check_width(block.value_width)?;
    let mut out = Vec::with_capacity(16 + block.entries.len() * (width + 2));
    write_varint(&mut out, block.src_worker as u64);
    write_varint(&mut out, block.dst_worker as u64);
    write_varint(&mut out, block.superstep);
    write_varint(&mut out, block.entries.len() as u64);
    out.push(block.value_width);
    let ids: Vec<VertexId> = block.entries.iter().map(|e| e.0).collect();
    write_sorted_ids(&mut out, &ids)?;
    for &(_, v) in &block.entries {
        if width == 4 && v > u32::MAX as u64 {
            return Err(Error::codec(format!("value {v:#x} does not fit in 4 bytes")));
        }
        out.extend_from_slice(&v.to_le_bytes()[..width]);
    }
    Ok(compression.compress(&out))
}

pub fn decode_message_block(
    bytes: &[u8],
    expected_width: u8,
    compression: &dyn Compression,
) -> Result<MessageBlock> {
    let raw = compression.decompress(bytes)?;
    let mut r = ByteReader::new(&raw);
    let src_worker = r.varint_u32("src worker")?;
    let dst_worker = r.varint_u32("dst worker")?;
    let superstep = r.varint()?;
    let count = r.varint()? as usize;
    let value_width = r.u8()?;
    if value_width != expected_width {
        return Err(Error::codec(format!(
            "block value width {value_width} does not match algorithm width {expected_width}"
        )));
    }
    let width = check_width(value_width)?;
    let ids = read_sorted_ids(&mut r, count)?;
    let mut entries = Vec::with_capacity(count);
    for id in ids {
        entries.push((id, r.uint_le(width)?));
    }
    r.finish()?;
    Ok(MessageBlock { src_worker, dst_worker, superstep, value_width, entries })
}
