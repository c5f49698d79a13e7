//! LEB128-style unsigned varints: 7 payload bits per byte, high bit set on
//! every byte except the last.

use crate::error::{Error, Result};

pub const MAX_VARINT_LEN: usize = 10;

pub fn varint_encode(n: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(MAX_VARINT_LEN);
    write_varint(&mut out, n);
    out
}

pub fn write_varint(out: &mut Vec<u8>, mut n: u64) {
    while n >= 0x80 {
        out.push((n as u8 & 0x7f) | 0x80);
        n >>= 7;
    }
    out.push(n as u8);
}

pub fn varint_len(mut n: u64) -> usize {
    let mut len = 1;
    while n >= 0x80 {
        n >>= 7;
        len += 1;
    }
    len
}

/// Decodes one varint from the front of `bytes`, returning the value and the
/// number of bytes consumed.
pub fn varint_decode(bytes: &[u8]) -> Result<(u64, usize)> {
    let mut value = 0u64;
    for (i, &b) in bytes.iter().enumerate() {
        if i == MAX_VARINT_LEN - 1 && b > 1 {
            return Err(Error::codec("varint overflows 64 bits"));
        }
        value |= ((b & 0x7f) as u64) << (7 * i);
        if b & 0x80 == 0 {
            return Ok((value, i + 1));
        }
        if i + 1 == MAX_VARINT_LEN {
            return Err(Error::codec("varint longer than 10 bytes"));
        }
    }
    Err(Error::codec("truncated varint"))
}

/// Sequential reader over an encoded buffer.
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn varint(&mut self) -> Result<u64> {
        let (v, n) = varint_decode(&self.buf[self.pos..])?;
        self.pos += n;
        Ok(v)
    }

    pub fn varint_u32(&mut self, what: &str) -> Result<u32> {
        let v = self.varint()?;
        u32::try_from(v).map_err(|_| Error::codec(format!("{what} {v} exceeds 32 bits")))
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::codec(format!(
                "truncated input: need {n} bytes, {} left",
                self.remaining()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    pub fn f64_le(&mut self) -> Result<f64> {
        let b = self.bytes(8)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    /// Reads an unsigned little-endian value of `width` bytes (1..=8).
    pub fn uint_le(&mut self, width: usize) -> Result<u64> {
        let b = self.bytes(width)?;
        let mut word = [0u8; 8];
        word[..width].copy_from_slice(b);
        Ok(u64::from_le_bytes(word))
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::codec(format!(
                "{} trailing bytes after payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_one_byte() {
        assert_eq!(varint_encode(0), vec![0x00]);
    }

    #[test]
    fn three_hundred() {
        // 300 = 0b10_0101100 -> low 7 bits 0x2c with continuation, then 0x02
        assert_eq!(varint_encode(300), vec![0xAC, 0x02]);
        assert_eq!(varint_decode(&[0xAC, 0x02]).unwrap(), (300, 2));
    }

    #[test]
    fn max_value_uses_ten_bytes() {
        let enc = varint_encode(u64::MAX);
        assert_eq!(enc.len(), 10);
        assert_eq!(varint_decode(&enc).unwrap(), (u64::MAX, 10));
        assert_eq!(varint_len(u64::MAX), 10);
    }

    #[test]
    fn truncated_and_overlong_inputs_fail() {
        assert!(varint_decode(&[]).is_err());
        assert!(varint_decode(&[0x80, 0x80]).is_err());
        assert!(varint_decode(&[0xff; 11]).is_err());
        // tenth byte may only carry the top bit of a u64
        let mut over = vec![0xff; 9];
        over.push(0x02);
        assert!(varint_decode(&over).is_err());
    }
}
