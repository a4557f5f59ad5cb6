//! The `SLC1` blob layout.
//!
//! Little-endian, in order:
//!
//! ```text
//! magic "SLC1"            4 bytes
//! version                 u8   (1)
//! domain                  u8   (0 = latent z, 1 = forward differences of z)
//! reserved                u16  (0)
//! n                       u32
//! latent_dim              u32
//! nnz                     u32
//! sigma2                  f64
//! c0                      f64
//! model params hash       u64
//! anchor                  f64  (domain 1 only)
//! coded index length      u32
//! coded index bytes
//! nnz binary16 weights    u16 each
//! ```

use crate::error::{Error, Result};

use super::CodeDomain;

pub const BLOB_MAGIC: &[u8; 4] = b"SLC1";
pub const BLOB_VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct CompressedBlob {
    pub domain: CodeDomain,
    pub n: u32,
    pub latent_dim: u32,
    pub sigma2: f64,
    pub c0: f64,
    pub model_hash: u64,
    pub anchor: Option<f64>,
    pub coded: Vec<u8>,
    pub weights: Vec<u16>,
}

impl CompressedBlob {
    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    /// Header bytes before the coded index stream.
    pub fn header_len(&self) -> usize {
        44 + if self.anchor.is_some() { 8 } else { 0 } + 4
    }

    /// Serialised size in bytes.
    pub fn byte_len(&self) -> usize {
        self.header_len() + self.coded.len() + 2 * self.weights.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(self.byte_len());
        b.extend_from_slice(BLOB_MAGIC);
        b.push(BLOB_VERSION);
        b.push(self.domain.code());
        b.extend_from_slice(&0u16.to_le_bytes());
        b.extend_from_slice(&self.n.to_le_bytes());
        b.extend_from_slice(&self.latent_dim.to_le_bytes());
        b.extend_from_slice(&(self.weights.len() as u32).to_le_bytes());
        b.extend_from_slice(&self.sigma2.to_le_bytes());
        b.extend_from_slice(&self.c0.to_le_bytes());
        b.extend_from_slice(&self.model_hash.to_le_bytes());
        if let Some(a) = self.anchor {
            b.extend_from_slice(&a.to_le_bytes());
        }
        b.extend_from_slice(&(self.coded.len() as u32).to_le_bytes());
        b.extend_from_slice(&self.coded);
        for w in &self.weights {
            b.extend_from_slice(&w.to_le_bytes());
        }
        b
    }

    /// Parses exactly one blob occupying all of `bytes`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (blob, used) = Self::read_prefix(bytes)?;
        if used != bytes.len() {
            return Err(Error::Format {
                offset: used,
                msg: format!("{} trailing bytes after blob", bytes.len() - used),
            });
        }
        Ok(blob)
    }

    /// Parses one blob from the start of `bytes`, returning it and the number
    /// of bytes it occupied. Never reads past the declared lengths.
    pub fn read_prefix(bytes: &[u8]) -> Result<(Self, usize)> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != BLOB_MAGIC {
            return Err(Error::Format {
                offset: 0,
                msg: "missing SLC1 magic".into(),
            });
        }
        let version = r.u8()?;
        if version != BLOB_VERSION {
            return Err(Error::UnsupportedVersion(version as u32));
        }
        let domain_code = r.u8()?;
        let domain = CodeDomain::from_code(domain_code).ok_or(Error::Format {
            offset: 5,
            msg: format!("unknown domain {domain_code}"),
        })?;
        let reserved = r.u16()?;
        if reserved != 0 {
            return Err(Error::Format {
                offset: 6,
                msg: format!("reserved field is {reserved:#06x}"),
            });
        }
        let n = r.u32()?;
        let latent_dim = r.u32()?;
        let nnz = r.u32()? as usize;
        let sigma2 = r.f64()?;
        let c0 = r.f64()?;
        let model_hash = r.u64()?;
        let anchor = match domain {
            CodeDomain::SelectorGradZ => Some(r.f64()?),
            CodeDomain::LatentZ => None,
        };
        let support = domain.support_len(latent_dim as usize);
        if nnz > support {
            return Err(Error::Format {
                offset: 16,
                msg: format!("nnz {nnz} exceeds support length {support}"),
            });
        }
        let coded_len = r.u32()? as usize;
        let coded = r.take(coded_len)?.to_vec();
        let weights = r
            .take(2 * nnz)?
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        Ok((
            CompressedBlob {
                domain,
                n,
                latent_dim,
                sigma2,
                c0,
                model_hash,
                anchor,
                coded,
                weights,
            },
            r.pos,
        ))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                expected: end,
                actual: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
