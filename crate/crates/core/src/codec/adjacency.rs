use super::varint::{varint_len, write_varint, ByteReader};
use crate::error::{Error, Result};
use crate::graph::VertexId;

/// Appends a sorted id list as `count, first, delta...` varints, followed by
/// one little-endian `f64` per id when `weights` is given.
pub fn write_adjacency(out: &mut Vec<u8>, sorted_dsts: &[VertexId], weights: Option<&[f64]>) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != sorted_dsts.len() {
            return Err(Error::Contract(format!(
                "{} weights for {} destinations",
                w.len(),
                sorted_dsts.len()
            )));
        }
    }
    write_varint(out, sorted_dsts.len() as u64);
    write_sorted_ids(out, sorted_dsts)?;
    if let Some(w) = weights {
        for x in w {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(())
}

pub fn encode_adjacency(sorted_dsts: &[VertexId]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(encoded_ids_len(sorted_dsts) + 2);
    write_adjacency(&mut out, sorted_dsts, None)?;
    Ok(out)
}

pub fn encode_weighted_adjacency(sorted_dsts: &[VertexId], weights: &[f64]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_adjacency(&mut out, sorted_dsts, Some(weights))?;
    Ok(out)
}

/// Writes a strictly ascending id list without a count prefix: the first id
/// verbatim, then successive differences.
pub fn write_sorted_ids(out: &mut Vec<u8>, ids: &[VertexId]) -> Result<()> {
    let mut prev = None;
    for &id in ids {
        match prev {
            None => write_varint(out, id),
            Some(p) if id > p => write_varint(out, id - p),
            Some(p) => {
                return Err(Error::Contract(format!(
                    "ids must be strictly ascending: {id} after {p}"
                )))
            }
        }
        prev = Some(id);
    }
    Ok(())
}

pub fn read_sorted_ids(r: &mut ByteReader<'_>, count: usize) -> Result<Vec<VertexId>> {
    let mut ids = Vec::with_capacity(count.min(r.remaining()));
    let mut prev: Option<VertexId> = None;
    for _ in 0..count {
        let raw = r.varint()?;
        let id = match prev {
            None => raw,
            Some(_) if raw == 0 => return Err(Error::codec("zero delta in ascending id list")),
            Some(p) => p
                .checked_add(raw)
                .ok_or_else(|| Error::codec("id delta overflows 64 bits"))?,
        };
        ids.push(id);
        prev = Some(id);
    }
    Ok(ids)
}

pub fn read_adjacency(r: &mut ByteReader<'_>, weighted: bool) -> Result<(Vec<VertexId>, Option<Vec<f64>>)> {
    let count = r.varint()? as usize;
    let ids = read_sorted_ids(r, count)?;
    let weights = if weighted {
        let mut w = Vec::with_capacity(count);
        for _ in 0..count {
            w.push(r.f64_le()?);
        }
        Some(w)
    } else {
        None
    };
    Ok((ids, weights))
}

pub fn decode_adjacency(bytes: &[u8]) -> Result<Vec<VertexId>> {
    let mut r = ByteReader::new(bytes);
    let (ids, _) = read_adjacency(&mut r, false)?;
    r.finish()?;
    Ok(ids)
}

pub fn decode_weighted_adjacency(bytes: &[u8]) -> Result<(Vec<VertexId>, Vec<f64>)> {
    let mut r = ByteReader::new(bytes);
    let (ids, w) = read_adjacency(&mut r, true)?;
    r.finish()?;
    Ok((ids, w.unwrap_or_default()))
}

fn encoded_ids_len(ids: &[VertexId]) -> usize {
    let mut prev = 0;
    ids.iter()
        .map(|&id| {
            let n = varint_len(id - prev.min(id));
            prev = id;
            n
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::varint::varint_encode;

    #[test]
    fn deltas_after_first_id() {
        let enc = encode_adjacency(&[5, 7, 1000]).unwrap();
        let mut want = Vec::new();
        for n in [3, 5, 2, 993] {
            want.extend(varint_encode(n));
        }
        assert_eq!(enc, want);
        assert_eq!(decode_adjacency(&enc).unwrap(), vec![5, 7, 1000]);
    }

    #[test]
    fn empty_list_is_a_zero_count() {
        assert_eq!(encode_adjacency(&[]).unwrap(), vec![0]);
        assert!(decode_adjacency(&[0]).unwrap().is_empty());
    }

    #[test]
    fn unsorted_input_is_rejected() {
        assert!(matches!(encode_adjacency(&[3, 3]), Err(Error::Contract(_))));
        assert!(matches!(encode_adjacency(&[4, 1]), Err(Error::Contract(_))));
    }

    #[test]
    fn weights_follow_ids() {
        let enc = encode_weighted_adjacency(&[1, 4], &[0.5, 2.0]).unwrap();
        assert_eq!(&enc[..3], &[2, 1, 3]);
        assert_eq!(&enc[3..11], &0.5f64.to_le_bytes());
        let (ids, w) = decode_weighted_adjacency(&enc).unwrap();
        assert_eq!(ids, vec![1, 4]);
        assert_eq!(w, vec![0.5, 2.0]);
    }
}
