use std::collections::HashMap;

use crate::algorithms::Algorithm;
use crate::bitmap::SlotSet;
use crate::codec::varint::{write_varint, ByteReader};
use crate::codec::{pack_values, unpack_values};
use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::partition::{Partition, Slot};

/// Worker-level mirror slots. With sharing on, a vertex mirrored by several
/// resident partitions occupies one slot; otherwise each partition keeps a
/// private copy.
#[derive(Debug, Default)]
pub struct MirrorStore {
    values: Vec<u64>,
    by_vertex: HashMap<VertexId, Vec<u32>>,
    /// (resident index, local slot) pairs reading each mirror slot.
    users: Vec<Vec<(usize, Slot)>>,
}

impl MirrorStore {
    /// Returns the store and, per partition, the outer-index -> slot map.
    pub fn build(parts: &[&Partition], shared: bool, alg: &dyn Algorithm) -> (Self, Vec<Vec<u32>>) {
        let mut store = MirrorStore::default();
        let mut indexes = Vec::with_capacity(parts.len());
        for (idx, part) in parts.iter().enumerate() {
            let mut index = Vec::with_capacity(part.outer_count());
            for (i, &gid) in part.outer_ids().iter().enumerate() {
                let slots = store.by_vertex.entry(gid).or_default();
                let slot = match slots.first() {
                    Some(&s) if shared => s,
                    _ => {
                        let s = store.values.len() as u32;
                        store.values.push(alg.initial_value(gid));
                        store.users.push(Vec::new());
                        slots.push(s);
                        s
                    }
                };
                store.users[slot as usize].push((idx, (part.inner_count() + i) as Slot));
                index.push(slot);
            }
            indexes.push(index);
        }
        (store, indexes)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn set_slot(&mut self, slot: u32, word: u64) {
        self.values[slot as usize] = word;
    }

    pub fn contains(&self, gid: VertexId) -> bool {
        self.by_vertex.contains_key(&gid)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.by_vertex.keys().copied()
    }

    /// Writes `word` into every slot mirroring `gid` and marks the reading
    /// partitions' local slots as changed. Returns false if `gid` is not
    /// mirrored here.
    pub fn apply(&mut self, gid: VertexId, word: u64, changed: &mut [SlotSet]) -> bool {
        let Some(slots) = self.by_vertex.get(&gid) else { return false };
        for &s in slots {
            self.values[s as usize] = word;
            for &(idx, local) in &self.users[s as usize] {
                changed[idx].set(local);
            }
        }
        true
    }
}

/// Values of one partition persisted between rotating-mode supersteps.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialResult {
    pub inner: Vec<u64>,
    pub outer: Vec<u64>,
    pub changed: SlotSet,
}

pub fn encode_partial(r: &PartialResult, width: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + (r.inner.len() + r.outer.len()) * width);
    write_varint(&mut out, r.inner.len() as u64);
    write_varint(&mut out, r.outer.len() as u64);
    out.push(width as u8);
    pack_values(&mut out, &r.inner, width);
    pack_values(&mut out, &r.outer, width);
    out.extend_from_slice(&r.changed.to_bytes());
    out
}

pub fn decode_partial(bytes: &[u8], part: &Partition, width: usize) -> Result<PartialResult> {
    let mut r = ByteReader::new(bytes);
    let (ni, no) = (r.varint()? as usize, r.varint()? as usize);
    if ni != part.inner_count() || no != part.outer_count() {
        return Err(Error::codec(format!(
            "partial result for partition {} has {ni}+{no} slots, expected {}+{}",
            part.id(),
            part.inner_count(),
            part.outer_count()
        )));
    }
    let w = r.u8()? as usize;
    if w != width {
        return Err(Error::codec(format!("partial result width {w}, expected {width}")));
    }
    let inner = unpack_values(&mut r, ni, width)?;
    let outer = unpack_values(&mut r, no, width)?;
    let changed = SlotSet::from_bytes(ni as u32, r.bytes((ni).div_ceil(8))?)?;
    r.finish()?;
    Ok(PartialResult { inner, outer, changed })
}

/// Final output words of one partition's inner vertices.
pub fn encode_final(values: &[u64], width: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + values.len() * width);
    write_varint(&mut out, values.len() as u64);
    out.push(width as u8);
    pack_values(&mut out, values, width);
    out
}

pub fn decode_final(bytes: &[u8], expected: usize, width: usize) -> Result<Vec<u64>> {
    let mut r = ByteReader::new(bytes);
    let n = r.varint()? as usize;
    let w = r.u8()? as usize;
    if n != expected || w != width {
        return Err(Error::codec(format!("final result holds {n} values of width {w}, expected {expected} of {width}")));
    }
    let v = unpack_values(&mut r, n, width)?;
    r.finish()?;
    Ok(v)
}
