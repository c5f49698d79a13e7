//! Binary codecs for partitions, adjacency lists and message blocks.
//!
//! Fixed-width fields are little-endian everywhere.

pub mod adjacency;
pub mod compression;
pub mod message;
pub mod partition_blob;
pub mod varint;

pub use adjacency::{decode_adjacency, encode_adjacency, encode_weighted_adjacency};
pub use compression::{compression_by_name, Compression, Identity, RunLength};
pub use message::{decode_message_block, encode_message_block, MessageBlock, BROADCAST};
pub use partition_blob::{decode_partition, decode_partition_header, encode_partition};
pub use varint::{varint_decode, varint_encode, ByteReader};

use crate::error::Result;

/// Packs raw value words at a fixed width.
pub fn pack_values(out: &mut Vec<u8>, values: &[u64], width: usize) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes()[..width]);
    }
}

pub fn unpack_values(r: &mut ByteReader<'_>, count: usize, width: usize) -> Result<Vec<u64>> {
    (0..count).map(|_| r.uint_le(width)).collect()
}
