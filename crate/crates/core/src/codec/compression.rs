use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Lossless transform applied to encoded blocks before they are stored.
pub trait Compression: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn compress(&self, data: &[u8]) -> Vec<u8>;
    fn decompress(&self, data: &[u8]) -> Result<Vec<u8>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Compression for Identity {
    fn name(&self) -> &'static str {
        "none"
    }

    fn compress(&self, data: &[u8]) -> Vec<u8> {
        data.to_vec()
    }

    fn decompress(&self, data: &[u8]) -> Result<Vec<u8>> {
        Ok(data.to_vec())
    }
}

/// Byte run-length coding as `(run length, byte)` pairs. Cheap, and effective
/// on the zero-heavy packed value arrays of integer algorithms.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunLength;

impl Compression for RunLength {
    fn name(&self) -> &'static str {
        "rle"
    }

    fn compress(&self, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(data.len() / 2 + 2);
        let mut i = 0;
        while i < data.len() {
            let b = data[i];
            let mut run = 1;
            while i + run < data.len() && data[i + run] == b && run < 255 {
                run += 1;
            }
            out.push(run as u8);
            out.push(b);
            i += run;
        }
        out
    }

    fn decompress(&self, data: &[u8]) -> Result<Vec<u8>> {
        if data.len() % 2 != 0 {
            return Err(Error::codec("odd-length run-length stream"));
        }
        let mut out = Vec::with_capacity(data.len() * 2);
        for pair in data.chunks_exact(2) {
            if pair[0] == 0 {
                return Err(Error::codec("zero-length run"));
            }
            out.extend(std::iter::repeat(pair[1]).take(pair[0] as usize));
        }
        Ok(out)
    }
}

pub fn compression_by_name(name: &str) -> Result<Arc<dyn Compression>> {
    match name {
        "none" | "identity" => Ok(Arc::new(Identity)),
        "rle" => Ok(Arc::new(RunLength)),
        other => Err(Error::Config(format!("unknown compression codec `{other}`"))),
    }
}
