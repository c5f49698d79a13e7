//! Fixed-width partition bitmaps and the masked intersection used to pick
//! one target partition per destination worker.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
struct Bits {
    len: u32,
    words: Vec<u64>,
}

impl Bits {
    fn new(len: u32) -> Self {
        Bits { len, words: vec![0; (len as usize).div_ceil(64)] }
    }

    fn set(&mut self, i: u32) {
        assert!(i < self.len, "bit {i} out of range for width {}", self.len);
        self.words[(i / 64) as usize] |= 1 << (i % 64);
    }

    fn get(&self, i: u32) -> bool {
        i < self.len && self.words[(i / 64) as usize] & (1 << (i % 64)) != 0
    }

    fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn lowest(&self) -> Option<u32> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i as u32 * 64 + w.trailing_zeros())
    }

    fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros();
                rest &= rest - 1;
                Some(wi as u32 * 64 + b)
            })
        })
    }

    fn to_bytes(&self) -> Vec<u8> {
        let n = (self.len as usize).div_ceil(8);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push((self.words[i / 8] >> ((i % 8) * 8)) as u8);
        }
        out
    }

    fn from_bytes(len: u32, bytes: &[u8]) -> Result<Self> {
        let n = (len as usize).div_ceil(8);
        if bytes.len() != n {
            return Err(Error::codec(format!(
                "bitmap of width {len} needs {n} bytes, got {}",
                bytes.len()
            )));
        }
        let mut bits = Bits::new(len);
        for (i, &b) in bytes.iter().enumerate() {
            bits.words[i / 8] |= (b as u64) << ((i % 8) * 8);
        }
        if let Some(hi) = bits.iter().last() {
            if hi >= len {
                return Err(Error::codec(format!("bit {hi} set beyond width {len}")));
            }
        }
        Ok(bits)
    }
}

macro_rules! bitmap_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, PartialEq, Eq, Hash)]
        pub struct $name(Bits);

        impl $name {
            pub fn new(width: u32) -> Self {
                $name(Bits::new(width))
            }

            pub fn from_ids(width: u32, ids: impl IntoIterator<Item = u32>) -> Self {
                let mut b = Self::new(width);
                for i in ids {
                    b.set(i);
                }
                b
            }

            pub fn width(&self) -> u32 {
                self.0.len
            }

            pub fn set(&mut self, i: u32) {
                self.0.set(i)
            }

            pub fn contains(&self, i: u32) -> bool {
                self.0.get(i)
            }

            pub fn count(&self) -> u32 {
                self.0.count()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn lowest(&self) -> Option<u32> {
                self.0.lowest()
            }

            pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
                self.0.iter()
            }

            /// Little-endian, LSB-first packing into `ceil(width / 8)` bytes.
            pub fn to_bytes(&self) -> Vec<u8> {
                self.0.to_bytes()
            }

            pub fn from_bytes(width: u32, bytes: &[u8]) -> Result<Self> {
                Bits::from_bytes(width, bytes).map($name)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{{", stringify!($name))?;
                for (k, i) in self.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{i}")?;
                }
                write!(f, "}}/{}", self.width())
            }
        }
    };
}

bitmap_type!(
    /// Partitions adjacent to one inner vertex (never includes the owner).
    PartitionBitmap
);
bitmap_type!(
    /// Partitions assigned to one worker.
    WorkerBitmap
);
bitmap_type!(
    /// Set of local vertex slots within one partition.
    SlotSet
);

impl SlotSet {
    pub fn union_with(&mut self, other: &SlotSet) {
        assert_eq!(self.width(), other.width(), "slot set width mismatch");
        for (a, b) in self.0.words.iter_mut().zip(&other.0.words) {
            *a |= b;
        }
    }
}

/// Bitwise AND of a vertex's adjacent partitions with a worker's partitions.
///
/// The lowest set bit of the result is the representative partition the
/// update is addressed to; an empty result means the worker needs nothing.
pub fn masked_intersection(
    vertex_bits: &PartitionBitmap,
    worker_bits: &WorkerBitmap,
) -> Result<PartitionBitmap> {
    if vertex_bits.width() != worker_bits.width() {
        return Err(Error::Contract(format!(
            "bitmap width mismatch: vertex {} vs worker {}",
            vertex_bits.width(),
            worker_bits.width()
        )));
    }
    let words = vertex_bits
        .0
        .words
        .iter()
        .zip(&worker_bits.0.words)
        .map(|(a, b)| a & b)
        .collect();
    Ok(PartitionBitmap(Bits { len: vertex_bits.width(), words }))
}
